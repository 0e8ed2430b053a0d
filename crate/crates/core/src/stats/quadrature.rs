//! Adaptive Gauss–Kronrod (7/15) quadrature.

use num_traits::{Float, FromPrimitive};

use super::lit;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for the odd-indexed Kronrod nodes (and the centre)
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_DEPTH: u32 = 40;

/// One G7/K15 panel: (kronrod estimate, |kronrod − gauss|).
fn panel<F, G>(f: &G, a: F, b: F) -> (F, F)
where
    F: Float + FromPrimitive,
    G: Fn(F) -> F,
{
    let half = lit::<F>(0.5);
    let centre = (a + b) * half;
    let half_len = (b - a) * half;
    let fc = f(centre);
    let mut kronrod = fc * lit(WGK[7]);
    let mut gauss = fc * lit(WG[3]);
    for j in 0..7 {
        let dx = half_len * lit(XGK[j]);
        let pair = f(centre - dx) + f(centre + dx);
        kronrod = kronrod + pair * lit(WGK[j]);
        if j % 2 == 1 {
            gauss = gauss + pair * lit(WG[j / 2]);
        }
    }
    (kronrod * half_len, ((kronrod - gauss) * half_len).abs())
}

fn adapt<F, G>(f: &G, a: F, b: F, whole: F, err: F, tol: F, depth: u32) -> F
where
    F: Float + FromPrimitive,
    G: Fn(F) -> F,
{
    if err <= tol || depth >= MAX_DEPTH || (b - a).abs() <= F::epsilon() * (a.abs() + b.abs()) {
        return whole;
    }
    let mid = (a + b) * lit(0.5);
    let (left, left_err) = panel(f, a, mid);
    let (right, right_err) = panel(f, mid, b);
    let half_tol = tol * lit(0.5);
    adapt(f, a, mid, left, left_err, half_tol, depth + 1) + adapt(f, mid, b, right, right_err, half_tol, depth + 1)
}

/// ∫ f over [a, b] to roughly `abs_tol` absolute error.
pub fn integrate<F, G>(f: G, a: F, b: F, abs_tol: F) -> F
where
    F: Float + FromPrimitive,
    G: Fn(F) -> F,
{
    if a == b {
        return F::zero();
    }
    let (whole, err) = panel(&f, a, b);
    adapt(&f, a, b, whole, err, abs_tol, 0)
}

/// Integral over consecutive breakpoints, splitting the tolerance evenly.
pub fn integrate_pieces<F, G>(f: G, breakpoints: &[F], abs_tol: F) -> F
where
    F: Float + FromPrimitive,
    G: Fn(F) -> F,
{
    let pieces = breakpoints.len().saturating_sub(1).max(1);
    let tol = abs_tol / lit(pieces as f64);
    breakpoints.windows(2).fold(F::zero(), |acc, w| acc + integrate(&f, w[0], w[1], tol))
}
