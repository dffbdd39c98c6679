//! Fixed quadrature rules: a degree-4 rule on the reference triangle and a
//! degree-5 Gauss rule on the unit interval. All integrands appearing in the
//! P2-P1 assembly and in the error estimator are polynomials within these
//! degrees, so integration is exact up to roundoff.

/// Rule on the reference triangle {(x,y): x,y >= 0, x+y <= 1}, points in
/// barycentric coordinates, weights summing to the reference area 1/2.
#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub exactness: usize,
}

/// Rule on [0,1], weights summing to 1.
#[derive(Debug, Clone)]
pub struct EdgeRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub exactness: usize,
}

/// Six-point degree-4 rule (Dunavant).
pub fn triangle_rule() -> TriangleRule {
    let a1 = 0.445948490915965;
    let w1 = 0.223381589678011;
    let a2 = 0.091576213509771;
    let w2 = 0.109951743655322;
    let mut points = Vec::with_capacity(6);
    let mut weights = Vec::with_capacity(6);
    for &(a, w) in &[(a1, w1), (a2, w2)] {
        let b = 1.0 - 2.0 * a;
        points.push([b, a, a]);
        points.push([a, b, a]);
        points.push([a, a, b]);
        weights.extend_from_slice(&[0.5 * w; 3]);
    }
    TriangleRule {
        points,
        weights,
        exactness: 4,
    }
}

/// Three-point Gauss-Legendre rule mapped to [0,1], exact to degree 5.
pub fn edge_rule() -> EdgeRule {
    let s = (0.6f64).sqrt(); // sqrt(3/5)
    EdgeRule {
        points: vec![0.5 * (1.0 - s), 0.5, 0.5 * (1.0 + s)],
        weights: vec![5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0],
        exactness: 5,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exact integral of x^a y^b over the reference triangle: a! b! / (a+b+2)!.
    fn tri_monomial(a: u32, b: u32) -> f64 {
        let fact = |n: u32| (1..=n).map(|k| k as f64).product::<f64>().max(1.0);
        fact(a) * fact(b) / fact(a + b + 2)
    }

    #[test]
    fn triangle_rule_exact_to_degree_4() {
        let rule = triangle_rule();
        for a in 0..=4u32 {
            for b in 0..=(4 - a) {
                let num: f64 = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(p, w)| w * p[1].powi(a as i32) * p[2].powi(b as i32))
                    .sum();
                let exact = tri_monomial(a, b);
                assert!(
                    (num - exact).abs() < 1e-14,
                    "x^{a} y^{b}: got {num}, want {exact}"
                );
            }
        }
        // Spot checks from the symbolic table.
        let integral = |a: u32, b: u32| -> f64 {
            rule.points
                .iter()
                .zip(&rule.weights)
                .map(|(p, w)| w * p[1].powi(a as i32) * p[2].powi(b as i32))
                .sum()
        };
        assert!((integral(0, 0) - 0.5).abs() < 1e-15);
        assert!((integral(2, 2) - 1.0 / 180.0).abs() < 1e-14);
        assert!((integral(4, 0) - 1.0 / 30.0).abs() < 1e-14);
    }

    #[test]
    fn edge_rule_exact_to_degree_5() {
        let rule = edge_rule();
        for k in 0..=5u32 {
            let num: f64 = rule
                .points
                .iter()
                .zip(&rule.weights)
                .map(|(t, w)| w * t.powi(k as i32))
                .sum();
            let exact = 1.0 / (k as f64 + 1.0);
            assert!((num - exact).abs() < 1e-15, "t^{k}: got {num}, want {exact}");
        }
    }
}
