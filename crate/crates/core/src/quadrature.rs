//! Fixed quadrature rules on tetrahedra and triangles, in barycentric form.

/// Barycentric points and weights (summing to 1) for the symmetric 4-point
/// rule, exact for quadratics on a tetrahedron.
pub const TET4: [([f64; 4], f64); 4] = {
    const A: f64 = 0.585_410_196_624_968_5;
    const B: f64 = 0.138_196_601_125_010_5;
    [
        ([A, B, B, B], 0.25),
        ([B, A, B, B], 0.25),
        ([B, B, A, B], 0.25),
        ([B, B, B, A], 0.25),
    ]
};

/// Edge-midpoint rule on a triangle, exact for quadratics.
pub const TRI3: [([f64; 3], f64); 3] = [
    ([0.5, 0.5, 0.0], 1.0 / 3.0),
    ([0.0, 0.5, 0.5], 1.0 / 3.0),
    ([0.5, 0.0, 0.5], 1.0 / 3.0),
];

#[cfg(test)]
mod tests {
    use super::*;

    // integral of l0^a l1^b l2^c l3^d over the reference simplex, divided by
    // its volume: a! b! c! d! 3! / (a+b+c+d+3)!
    fn tet_moment(p: [u32; 4]) -> f64 {
        let f = |n: u32| (1..=n).map(f64::from).product::<f64>();
        p.iter().map(|&k| f(k)).product::<f64>() * 6.0 / f(p.iter().sum::<u32>() + 3)
    }

    fn tri_moment(p: [u32; 3]) -> f64 {
        let f = |n: u32| (1..=n).map(f64::from).product::<f64>();
        p.iter().map(|&k| f(k)).product::<f64>() * 2.0 / f(p.iter().sum::<u32>() + 2)
    }

    #[test]
    fn tet_rule_is_exact_to_degree_two() {
        for a in 0..3u32 {
            for b in 0..3 - a {
                for c in 0..3 - a - b {
                    for d in 0..3 - a - b - c {
                        let q: f64 = TET4
                            .iter()
                            .map(|(l, w)| w * l[0].powi(a as i32) * l[1].powi(b as i32) * l[2].powi(c as i32) * l[3].powi(d as i32))
                            .sum();
                        assert!((q - tet_moment([a, b, c, d])).abs() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn tri_rule_is_exact_to_degree_two() {
        for a in 0..3u32 {
            for b in 0..3 - a {
                for c in 0..3 - a - b {
                    let q: f64 = TRI3
                        .iter()
                        .map(|(l, w)| w * l[0].powi(a as i32) * l[1].powi(b as i32) * l[2].powi(c as i32))
                        .sum();
                    assert!((q - tri_moment([a, b, c])).abs() < 1e-15);
                }
            }
        }
    }
}
