//! Reference joint-cpdf values for the calibrated KoBoL models.
//!
//! Both sets use `λ₊ = 1`, `λ₋ = -2`, `m₂ = 0.1`, `μ = 0`, `x₁ = x₂ = 0` and the
//! mesh `a₁ ∈ A1`, `a₂ ∈ A2`. Matrices are indexed `[a₂][a₁]`.

use crate::error::Result;
use crate::models::LevyModel;

pub const A1: [f64; 5] = [-0.075, -0.05, -0.025, 0.0, 0.025];
pub const A2: [f64; 5] = [0.025, 0.05, 0.075, 0.1, 0.175];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoldenCell {
    pub t: f64,
    pub a1: f64,
    pub a2: f64,
    pub value: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoldenSet {
    pub name: &'static str,
    pub nu: f64,
    pub provenance: &'static str,
    pub cells: Vec<GoldenCell>,
    /// `(T, a₁, a₂)` of cells whose reference values are unusable.
    pub excluded: Vec<(f64, f64, f64)>,
}

impl GoldenSet {
    pub fn model(&self) -> Result<LevyModel> {
        LevyModel::kobol_calibrated(self.nu, 1.0, -2.0, 0.1, 0.0)
    }

    /// Maturities in ascending order.
    pub fn maturities(&self) -> Vec<f64> {
        let mut ts: Vec<f64> = self.cells.iter().map(|c| c.t).collect();
        ts.sort_by(|a, b| a.total_cmp(b));
        ts.dedup();
        ts
    }

    pub fn cells_at(&self, t: f64) -> Vec<GoldenCell> {
        self.cells.iter().copied().filter(|c| c.t == t).collect()
    }
}

const NU02_T025: [[f64; 5]; 5] = [
    [0.0528532412024316, 0.0649856679446115, 0.0879014169039594, 0.506498701211732, 0.923417160799499],
    [0.0533971065051705, 0.0656207900757611, 0.088669961239051, 0.507497961893707, 0.925278586629321],
    [0.0536378889312989, 0.0658957955144874, 0.0889908892581364, 0.50788584329118, 0.925781540582069],
    [0.0537738608706033, 0.0660488001673674, 0.0891656084917816, 0.508089681056682, 0.926027783268806],
    [0.0539603399744032, 0.0662551510091744, 0.0893960371866527, 0.508350135593748, 0.92632726895684],
];

const NAN_ROW: [f64; 5] = [f64::NAN; 5];

const NU12: [(f64, [[f64; 5]; 5]); 5] = [
    (
        0.05,
        [
            [0.0426345508873718, 0.0758341778428274, 0.176479681837557, 0.493783805726552, 0.76399258839732],
            [0.0446956827465834, 0.0789187973252002, 0.181782048757841, 0.506036792145469, 0.825492125538671],
            [0.0450873920315921, 0.079458899594002, 0.182586511426248, 0.507408036688672, 0.828608126596909],
            [0.0452106318743183, 0.0796204107687271, 0.182808929783218, 0.507738655589658, 0.829169593624407],
            [0.0452978231524441, 0.0797292390171655, 0.182948969868149, 0.507926759921863, 0.829439308709987],
        ],
    ),
    (
        0.25,
        [
            [0.163806126424503, 0.222533168794254, 0.292815888435677, 0.358988211793687, 0.393398675917049],
            [0.197831466772809, 0.270940241301468, 0.364113238782974, 0.465880513837506, 0.552855276262823],
            [0.209526961250121, 0.287054894532268, 0.387393027996113, 0.501316508355731, 0.609524332900865],
            [0.214159056436717, 0.293191765138545, 0.395866562093269, 0.513635238184172, 0.628571055479703],
            [0.217748710666063, 0.297727492839728, 0.401770665632438, 0.521618850122037, 0.639907339969623],
        ],
    ),
    (
        1.0,
        [
            [0.178941818286114, 0.190289038594875, 0.199647908813292, 0.206347351121367, 0.209437388152747],
            [0.260426736227358, 0.280223680907225, 0.29788417893014, 0.312420272173741, 0.322811896989456],
            [0.313477022993733, 0.340285459289499, 0.365414405617852, 0.387710627803938, 0.405984471788573],
            [0.348622321432066, 0.380779386234454, 0.411911217215892, 0.440836201412271, 0.466304790550708],
            [0.397364133265805, 0.437693401916372, 0.478455631551985, 0.518663398654916, 0.55725449371475],
        ],
    ),
    (
        5.0,
        [
            [0.111436716966636, 0.112239673751285, 0.112868052194392, 0.113305936381633, 0.113508446236642],
            NAN_ROW,
            NAN_ROW,
            NAN_ROW,
            [0.368564902845242, 0.374400775302313, 0.379792301029147, 0.384713109733035, 0.389137993602727],
        ],
    ),
    (
        15.0,
        [
            [0.083599231183863, 0.083725522194071, 0.0838241629685378, 0.0838929695457668, 0.0839249287233805],
            [0.130217710987261, 0.130456839782095, 0.130654399607263, 0.130808705570046, 0.13091634106018],
            [0.169363038877019, 0.169728032397852, 0.170040043384744, 0.170297815998657, 0.170499151715123],
            [0.204270598983103, 0.204774983963964, 0.205216260776888, 0.205593481299844, 0.205905127535884],
            [0.293472724302235, 0.294468206269081, 0.295374834640356, 0.296192060853885, 0.296919211526691],
        ],
    ),
];

fn push_matrix(set: &mut GoldenSet, t: f64, m: &[[f64; 5]; 5], tol: f64) {
    for (r, a2) in A2.iter().enumerate() {
        for (c, a1) in A1.iter().enumerate() {
            let value = m[r][c];
            if value.is_nan() {
                set.excluded.push((t, *a1, *a2));
            } else {
                set.cells.push(GoldenCell { t, a1: *a1, a2: *a2, value, tol });
            }
        }
    }
}

/// `ν = 0.2`, `T = 0.25`.
pub fn nu02() -> GoldenSet {
    let mut s = GoldenSet {
        name: "nu02",
        nu: 0.2,
        provenance: "published 15-16 digit benchmark for KoBoL nu=0.2, T=0.25",
        cells: Vec::new(),
        excluded: Vec::new(),
    };
    push_matrix(&mut s, 0.25, &NU02_T025, 1e-10);
    s
}

/// `ν = 1.2`, `T ∈ {0.05, 0.25, 1, 5, 15}`. At `T = 5` the published rows for
/// `a₂ ∈ {0.05, 0.075, 0.1}` repeat the `T = 1` rows and are excluded.
pub fn nu12() -> GoldenSet {
    let mut s = GoldenSet {
        name: "nu12",
        nu: 1.2,
        provenance: "published 15-16 digit benchmark for KoBoL nu=1.2, T in {0.05, 0.25, 1, 5, 15}",
        cells: Vec::new(),
        excluded: Vec::new(),
    };
    for (t, m) in &NU12 {
        push_matrix(&mut s, *t, m, if *t >= 15.0 { 1e-8 } else { 1e-9 });
    }
    s
}

pub fn by_name(name: &str) -> Option<GoldenSet> {
    match name {
        "nu02" => Some(nu02()),
        "nu12" => Some(nu12()),
        _ => None,
    }
}

pub const SET_NAMES: [&str; 2] = ["nu02", "nu12"];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        assert_eq!(nu02().cells.len(), 25);
        let s = nu12();
        assert_eq!(s.cells.len() + s.excluded.len(), 125);
        assert_eq!(s.excluded.len(), 15);
        assert!(s.excluded.iter().all(|e| e.0 == 5.0));
        assert_eq!(s.maturities(), vec![0.05, 0.25, 1.0, 5.0, 15.0]);
    }

    #[test]
    fn reference_values_are_monotone() {
        for s in [nu02(), nu12()] {
            for t in s.maturities() {
                let cells = s.cells_at(t);
                for a in &cells {
                    for b in &cells {
                        if a.a1 <= b.a1 && a.a2 <= b.a2 {
                            assert!(a.value <= b.value, "{} T={t}: {a:?} vs {b:?}", s.name);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn lookup() {
        for n in SET_NAMES {
            assert_eq!(by_name(n).unwrap().name, n);
        }
        assert!(by_name("other").is_none());
    }
}
