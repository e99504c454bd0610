//! The fixed 28-measure registry computed from one normalized GLCM.
//!
//! Indices are 0-based, logs are base 2, and terms with `p = 0` contribute
//! zero to entropy-type sums. Measures 0-12 are the classical Haralick
//! statistics; 13-27 are documented extensions. The count and order are
//! pinned by `MEASURE_NAMES` and must stay stable: downstream feature
//! vectors, selection, and persisted bases all index into this registry.
//!
//! With `p(i,j)` the normalized matrix, `px`/`py` the marginals,
//! `mx`/`my`/`sx`/`sy` the marginal means and standard deviations,
//! `ps(k) = sum_{i+j=k} p(i,j)` and `pd(k) = sum_{|i-j|=k} p(i,j)`:
//!
//! | # | name | formula |
//! |---|------|---------|
//! | 0 | angular_second_moment | sum p^2 |
//! | 1 | contrast | sum (i-j)^2 p |
//! | 2 | correlation | sum (i-mx)(j-my) p / (sx sy), 0 when sx sy = 0 |
//! | 3 | sum_of_squares | sum (i-mx)^2 p |
//! | 4 | inverse_difference_moment | sum p / (1 + (i-j)^2) |
//! | 5 | sum_average | sum k ps(k) |
//! | 6 | sum_variance | sum (k - sum_average)^2 ps(k) |
//! | 7 | sum_entropy | -sum ps log2 ps |
//! | 8 | entropy | -sum p log2 p |
//! | 9 | difference_variance | sum (k - difference_average)^2 pd(k) |
//! | 10 | difference_entropy | -sum pd log2 pd |
//! | 11 | info_correlation_1 | (HXY - HXY1) / max(HX, HY), 0 when the max is 0 |
//! | 12 | info_correlation_2 | sqrt(1 - exp(-2 (HXY2 - HXY))) |
//! | 13 | autocorrelation | sum i j p |
//! | 14 | cluster_tendency | sum (i+j-mx-my)^2 p |
//! | 15 | cluster_shade | sum (i+j-mx-my)^3 p |
//! | 16 | cluster_prominence | sum (i+j-mx-my)^4 p |
//! | 17 | dissimilarity | sum |i-j| p |
//! | 18 | difference_average | sum k pd(k) |
//! | 19 | inverse_difference | sum p / (1 + |i-j|) |
//! | 20 | inverse_difference_normalized | sum p / (1 + |i-j|/L) |
//! | 21 | inverse_difference_moment_normalized | sum p / (1 + (i-j)^2/L^2) |
//! | 22 | inverse_variance | sum_{i != j} p / (i-j)^2 |
//! | 23 | maximum_probability | max p |
//! | 24 | joint_average | mx |
//! | 25 | marginal_entropy | HX = -sum px log2 px |
//! | 26 | hxy1_cross_entropy | -sum p log2(px py) |
//! | 27 | hxy2_cross_entropy | -sum px py log2(px py) |

use super::Glcm;

pub const MEASURE_COUNT: usize = 28;

pub const MEASURE_NAMES: [&str; MEASURE_COUNT] = [
    "angular_second_moment",
    "contrast",
    "correlation",
    "sum_of_squares",
    "inverse_difference_moment",
    "sum_average",
    "sum_variance",
    "sum_entropy",
    "entropy",
    "difference_variance",
    "difference_entropy",
    "info_correlation_1",
    "info_correlation_2",
    "autocorrelation",
    "cluster_tendency",
    "cluster_shade",
    "cluster_prominence",
    "dissimilarity",
    "difference_average",
    "inverse_difference",
    "inverse_difference_normalized",
    "inverse_difference_moment_normalized",
    "inverse_variance",
    "maximum_probability",
    "joint_average",
    "marginal_entropy",
    "hxy1_cross_entropy",
    "hxy2_cross_entropy",
];

#[inline]
fn plog2(p: f64) -> f64 {
    if p > 0.0 {
        p.log2()
    } else {
        0.0
    }
}

/// All 28 measures of one normalized GLCM, in registry order.
pub fn haralick_28(glcm: &Glcm) -> [f64; MEASURE_COUNT] {
    let l = glcm.levels();
    let p = glcm.probabilities();

    let mut px = vec![0.0; l];
    let mut py = vec![0.0; l];
    let mut ps = vec![0.0; 2 * l - 1];
    let mut pd = vec![0.0; l];
    for i in 0..l {
        for j in 0..l {
            let v = p[i * l + j];
            px[i] += v;
            py[j] += v;
            ps[i + j] += v;
            pd[i.abs_diff(j)] += v;
        }
    }
    let mx: f64 = px.iter().enumerate().map(|(i, &v)| i as f64 * v).sum();
    let my: f64 = py.iter().enumerate().map(|(j, &v)| j as f64 * v).sum();
    let sx: f64 = px
        .iter()
        .enumerate()
        .map(|(i, &v)| (i as f64 - mx).powi(2) * v)
        .sum::<f64>()
        .sqrt();
    let sy: f64 = py
        .iter()
        .enumerate()
        .map(|(j, &v)| (j as f64 - my).powi(2) * v)
        .sum::<f64>()
        .sqrt();

    let hx: f64 = -px.iter().map(|&v| v * plog2(v)).sum::<f64>();
    let hy: f64 = -py.iter().map(|&v| v * plog2(v)).sum::<f64>();

    let mut asm = 0.0;
    let mut contrast = 0.0;
    let mut corr_num = 0.0;
    let mut ssq = 0.0;
    let mut idm = 0.0;
    let mut hxy = 0.0;
    let mut autocorr = 0.0;
    let mut cluster2 = 0.0;
    let mut cluster3 = 0.0;
    let mut cluster4 = 0.0;
    let mut dissim = 0.0;
    let mut invdiff = 0.0;
    let mut idn = 0.0;
    let mut idmn = 0.0;
    let mut invvar = 0.0;
    let mut maxprob = 0.0f64;
    let mut hxy1 = 0.0;
    let mut hxy2 = 0.0;
    let lf = l as f64;
    for i in 0..l {
        for j in 0..l {
            let v = p[i * l + j];
            let (fi, fj) = (i as f64, j as f64);
            let d = fi - fj;
            let dev = fi + fj - mx - my;
            asm += v * v;
            contrast += d * d * v;
            corr_num += (fi - mx) * (fj - my) * v;
            ssq += (fi - mx) * (fi - mx) * v;
            idm += v / (1.0 + d * d);
            hxy -= v * plog2(v);
            autocorr += fi * fj * v;
            cluster2 += dev * dev * v;
            cluster3 += dev * dev * dev * v;
            cluster4 += dev * dev * dev * dev * v;
            dissim += d.abs() * v;
            invdiff += v / (1.0 + d.abs());
            idn += v / (1.0 + d.abs() / lf);
            idmn += v / (1.0 + d * d / (lf * lf));
            if i != j {
                invvar += v / (d * d);
            }
            maxprob = maxprob.max(v);
            let marg = px[i] * py[j];
            hxy1 -= v * plog2(marg);
            hxy2 -= marg * plog2(marg);
        }
    }
    let correlation = if sx * sy > 1e-12 {
        corr_num / (sx * sy)
    } else {
        0.0
    };

    let sum_average: f64 = ps.iter().enumerate().map(|(k, &v)| k as f64 * v).sum();
    let sum_variance: f64 = ps
        .iter()
        .enumerate()
        .map(|(k, &v)| (k as f64 - sum_average).powi(2) * v)
        .sum();
    let sum_entropy: f64 = -ps.iter().map(|&v| v * plog2(v)).sum::<f64>();
    let diff_average: f64 = pd.iter().enumerate().map(|(k, &v)| k as f64 * v).sum();
    let diff_variance: f64 = pd
        .iter()
        .enumerate()
        .map(|(k, &v)| (k as f64 - diff_average).powi(2) * v)
        .sum();
    let diff_entropy: f64 = -pd.iter().map(|&v| v * plog2(v)).sum::<f64>();

    let hmax = hx.max(hy);
    let imc1 = if hmax > 1e-12 {
        (hxy - hxy1) / hmax
    } else {
        0.0
    };
    let imc2 = (1.0 - (-2.0 * (hxy2 - hxy)).exp()).max(0.0).sqrt();

    [
        asm,
        contrast,
        correlation,
        ssq,
        idm,
        sum_average,
        sum_variance,
        sum_entropy,
        hxy,
        diff_variance,
        diff_entropy,
        imc1,
        imc2,
        autocorr,
        cluster2,
        cluster3,
        cluster4,
        dissim,
        diff_average,
        invdiff,
        idn,
        idmn,
        invvar,
        maxprob,
        mx,
        hx,
        hxy1,
        hxy2,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_glcm(l: usize) -> Glcm {
        let p = vec![1.0 / (l * l) as f64; l * l];
        Glcm::from_probabilities(l, p, (1, 0, 0))
    }

    fn single_cell_glcm(l: usize, k: usize) -> Glcm {
        let mut p = vec![0.0; l * l];
        p[k * l + k] = 1.0;
        Glcm::from_probabilities(l, p, (1, 0, 0))
    }

    #[test]
    fn registry_is_pinned() {
        assert_eq!(MEASURE_COUNT, 28);
        assert_eq!(MEASURE_NAMES.len(), 28);
        assert_eq!(MEASURE_NAMES[0], "angular_second_moment");
        assert_eq!(MEASURE_NAMES[8], "entropy");
        assert_eq!(MEASURE_NAMES[27], "hxy2_cross_entropy");
        // No duplicates.
        let mut names = MEASURE_NAMES.to_vec();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), 28);
    }

    #[test]
    fn uniform_glcm_asm_is_one_over_l_squared() {
        for l in [2usize, 4, 16, 48] {
            let m = haralick_28(&uniform_glcm(l));
            assert!(
                (m[0] - 1.0 / (l * l) as f64).abs() < 1e-15,
                "ASM at L={l}: {}",
                m[0]
            );
        }
    }

    #[test]
    fn single_cell_diagonal_glcm() {
        let m = haralick_28(&single_cell_glcm(8, 3));
        assert_eq!(m[1], 0.0); // contrast
        assert_eq!(m[0], 1.0); // ASM
        assert_eq!(m[8], 0.0); // entropy of a point mass
        assert_eq!(m[2], 0.0); // correlation convention with zero variance
        assert_eq!(m[23], 1.0); // maximum probability
        assert_eq!(m[24], 3.0); // joint average
        assert_eq!(m[17], 0.0); // dissimilarity
        assert_eq!(m[22], 0.0); // inverse variance
    }

    #[test]
    fn output_length_is_28_and_finite() {
        let m = haralick_28(&uniform_glcm(16));
        assert_eq!(m.len(), 28);
        assert!(m.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn uniform_glcm_entropies() {
        let l = 16usize;
        let m = haralick_28(&uniform_glcm(l));
        // Joint entropy of the uniform L*L distribution is 2 log2 L.
        assert!((m[8] - 2.0 * (l as f64).log2()).abs() < 1e-12);
        // Marginals are uniform, HX = log2 L.
        assert!((m[25] - (l as f64).log2()).abs() < 1e-12);
        // Independent uniform marginals: HXY1 = HXY2 = HXY, IMC2 = 0.
        assert!((m[26] - m[8]).abs() < 1e-12);
        assert!((m[27] - m[8]).abs() < 1e-12);
        assert!(m[12].abs() < 1e-6);
    }

    #[test]
    fn dissimilarity_equals_difference_average() {
        // Both are registered; they coincide by construction.
        let mut p = vec![0.0; 16];
        // Mass at (0,1), (1,0), (2,3), (3,2): every pair differs by one.
        p[1] = 0.25;
        p[4] = 0.25;
        p[11] = 0.25;
        p[14] = 0.25;
        let g = Glcm::from_probabilities(4, p, (1, 0, 0));
        let m = haralick_28(&g);
        assert!((m[17] - m[18]).abs() < 1e-15);
        assert!((m[17] - 1.0).abs() < 1e-15);
    }
}
