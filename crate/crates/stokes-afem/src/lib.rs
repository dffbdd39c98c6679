//! Adaptive Taylor-Hood finite element solver for the 2D Stokes eigenvalue
//! problem on polygonal domains, with a residual a posteriori estimator and a
//! SOLVE-ESTIMATE-MARK-REFINE loop driven by Dorfler marking and
//! newest-vertex bisection.

pub mod adaptive;
pub mod assembly;
pub mod cli;
pub mod diagnostics;
pub mod eigsolve;
pub mod estimator;
pub mod mesh;
pub mod quadrature;
pub mod space;
pub mod sparse;
