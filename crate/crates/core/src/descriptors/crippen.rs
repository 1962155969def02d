//! Crippen atom-contribution logP.

use std::sync::OnceLock;

use super::env::{Env, B};
use super::DescriptorError;
use crate::chem::Molecule;

type HeavyTest = fn(&Env, usize) -> bool;
type HydrogenTest = fn(&Env, Option<usize>) -> bool;

#[derive(Clone, Copy)]
enum Test {
    Heavy(HeavyTest),
    Hydrogen(HydrogenTest),
}

#[derive(Clone)]
pub struct CrippenRow {
    pub type_id: String,
    pub predicate_id: String,
    pub value: f64,
    test: Test,
}

/// Ordered atom-type table; the first matching row types an atom.
#[derive(Clone)]
pub struct CrippenTable {
    rows: Vec<CrippenRow>,
}

const BUILTIN: &str = include_str!("../../data/crippen.txt");

impl CrippenTable {
    /// Parses `type-id predicate-id value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, DescriptorError> {
        let mut rows = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let bad = || DescriptorError::Table { line: n + 1, message: line.to_string() };
            let cols: Vec<&str> = line.split_whitespace().collect();
            let [type_id, predicate_id, value] = cols[..] else { return Err(bad()) };
            let value: f64 = value.parse().map_err(|_| bad())?;
            let test = lookup(predicate_id).ok_or_else(bad)?;
            rows.push(CrippenRow { type_id: type_id.into(), predicate_id: predicate_id.into(), value, test });
        }
        Ok(CrippenTable { rows })
    }

    pub fn builtin() -> &'static CrippenTable {
        static TABLE: OnceLock<CrippenTable> = OnceLock::new();
        TABLE.get_or_init(|| CrippenTable::parse(BUILTIN).expect("built-in Crippen table is well formed"))
    }

    pub fn rows(&self) -> &[CrippenRow] {
        &self.rows
    }

    fn heavy_row(&self, env: &Env, a: usize) -> Option<&CrippenRow> {
        self.rows.iter().find(|r| matches!(r.test, Test::Heavy(t) if t(env, a)))
    }

    fn hydrogen_row(&self, env: &Env, parent: Option<usize>) -> Option<&CrippenRow> {
        self.rows.iter().find(|r| matches!(r.test, Test::Hydrogen(t) if t(env, parent)))
    }

    /// Per-atom contributions: each heavy atom's value plus those of its
    /// attached hydrogens. Unclassified atoms are reported.
    pub fn contributions(&self, mol: &Molecule) -> Vec<Result<f64, DescriptorError>> {
        let env = Env::new(mol);
        (0..mol.atoms.len())
            .map(|a| {
                let own = if env.z(a) == 1 {
                    let parent = mol.neighbors(a).first().map(|&(p, _)| p);
                    self.hydrogen_row(&env, parent)
                } else {
                    self.heavy_row(&env, a)
                };
                let own = own.ok_or(DescriptorError::UnclassifiedAtom {
                    atom: a,
                    element: mol.atoms[a].element.symbol(),
                })?;
                let hs = mol.atoms[a].total_h();
                let h_value = if hs > 0 {
                    self.hydrogen_row(&env, Some(a)).map_or(0.0, |r| r.value) * hs as f64
                } else {
                    0.0
                };
                Ok(own.value + h_value)
            })
            .collect()
    }
}

fn het(e: &Env, a: usize) -> bool {
    !e.aromatic(a) && matches!(e.z(a), 7 | 8 | 15 | 16 | 9 | 17 | 35 | 53)
}

fn lookup(id: &str) -> Option<Test> {
    use Test::{Heavy as Hv, Hydrogen as Hy};
    let t: Test = match id {
        // carbon
        "ch4" => Hv(|e, a| e.aliph(a, 6) && e.h(a) == 4),
        "ch3_c" => Hv(|e, a| e.aliph(a, 6) && e.h(a) == 3 && e.any(a, None, B::Default, &|n| e.aliph(n, 6))),
        "ch2_c_c" => Hv(|e, a| {
            e.aliph(a, 6) && e.h(a) == 2 && e.has(a, None, &[(B::Default, &|n| e.aliph(n, 6)), (B::Default, &|n| e.aliph(n, 6))])
        }),
        "ch_c_c_c" => Hv(|e, a| {
            let c: &dyn Fn(usize) -> bool = &|n| e.aliph(n, 6);
            e.aliph(a, 6) && e.h(a) == 1 && e.has(a, None, &[(B::Default, c), (B::Default, c), (B::Default, c)])
        }),
        "c_c_c_c_c" => Hv(|e, a| {
            let c: &dyn Fn(usize) -> bool = &|n| e.aliph(n, 6);
            e.aliph(a, 6) && e.has(a, None, &[(B::Default, c), (B::Default, c), (B::Default, c), (B::Default, c)])
        }),
        "ch3_het" => Hv(|e, a| e.aliph(a, 6) && e.h(a) == 3 && e.any(a, None, B::Default, &|n| het(e, n))),
        "ch2x4_het_al" => Hv(|e, a| {
            e.aliph(a, 6)
                && e.h(a) == 2
                && e.x(a) == 4
                && e.has(a, None, &[(B::Default, &|n| het(e, n)), (B::Default, &|n| e.aliph_heavy(n))])
        }),
        "ch1x4_het_al_al" => Hv(|e, a| {
            let al: &dyn Fn(usize) -> bool = &|n| e.aliph_heavy(n);
            e.aliph(a, 6)
                && e.h(a) == 1
                && e.x(a) == 4
                && e.has(a, None, &[(B::Default, &|n| het(e, n)), (B::Default, al), (B::Default, al)])
        }),
        "ch0x4_het_al_al_al" => Hv(|e, a| {
            let al: &dyn Fn(usize) -> bool = &|n| e.aliph_heavy(n);
            e.aliph(a, 6)
                && e.h(a) == 0
                && e.x(a) == 4
                && e.has(a, None, &[(B::Default, &|n| het(e, n)), (B::Default, al), (B::Default, al), (B::Default, al)])
        }),
        "c_dbl_al_nonc" => Hv(|e, a| e.aliph(a, 6) && e.any(a, None, B::Double, &|n| e.aliph_heavy(n) && e.z(n) != 6)),
        "ch2_dbl_c" => Hv(|e, a| e.aliph(a, 6) && e.h(a) == 2 && e.any(a, None, B::Double, &|n| e.aliph(n, 6))),
        "ch1_dbl_c_al" => Hv(|e, a| {
            e.aliph(a, 6)
                && e.h(a) == 1
                && e.has(a, None, &[(B::Double, &|n| e.aliph(n, 6)), (B::Default, &|n| e.aliph_heavy(n))])
        }),
        "ch0_dbl_c_al_al" => Hv(|e, a| {
            let al: &dyn Fn(usize) -> bool = &|n| e.aliph_heavy(n);
            e.aliph(a, 6) && e.h(a) == 0 && e.has(a, None, &[(B::Double, &|n| e.aliph(n, 6)), (B::Default, al), (B::Default, al)])
        }),
        "c_dbl_c_dbl_c" => Hv(|e, a| {
            let c: &dyn Fn(usize) -> bool = &|n| e.aliph(n, 6);
            e.aliph(a, 6) && e.has(a, None, &[(B::Double, c), (B::Double, c)])
        }),
        "cx2_tpl_al" => Hv(|e, a| e.aliph(a, 6) && e.x(a) == 2 && e.any(a, None, B::Triple, &|n| e.aliph_heavy(n))),
        "ch3_arc" => Hv(|e, a| e.aliph(a, 6) && e.h(a) == 3 && e.any(a, None, B::Default, &|n| e.arom(n, 6))),
        "ch3_ar" => Hv(|e, a| e.aliph(a, 6) && e.h(a) == 3 && e.any(a, None, B::Default, &|n| e.aromatic(n))),
        "ch2x4_ar" => Hv(|e, a| e.aliph(a, 6) && e.h(a) == 2 && e.x(a) == 4 && e.any(a, None, B::Default, &|n| e.aromatic(n))),
        "ch1x4_ar" => Hv(|e, a| e.aliph(a, 6) && e.h(a) == 1 && e.x(a) == 4 && e.any(a, None, B::Default, &|n| e.aromatic(n))),
        "ch0x4_ar" => Hv(|e, a| e.aliph(a, 6) && e.h(a) == 0 && e.x(a) == 4 && e.any(a, None, B::Default, &|n| e.aromatic(n))),
        "arch0_single_al_unusual" => Hv(|e, a| {
            e.arom(a, 6)
                && e.h(a) == 0
                && e.any(a, None, B::Single, &|n| e.aliph_heavy(n) && !matches!(e.z(n), 6 | 7 | 8 | 16 | 9 | 17 | 35 | 53))
        }),
        "arc_f" => Hv(|e, a| e.arom(a, 6) && e.any(a, None, B::Default, &|n| e.z(n) == 9)),
        "arc_cl" => Hv(|e, a| e.arom(a, 6) && e.any(a, None, B::Default, &|n| e.z(n) == 17)),
        "arc_br" => Hv(|e, a| e.arom(a, 6) && e.any(a, None, B::Default, &|n| e.z(n) == 35)),
        "arc_i" => Hv(|e, a| e.arom(a, 6) && e.any(a, None, B::Default, &|n| e.z(n) == 53)),
        "arch1" => Hv(|e, a| e.arom(a, 6) && e.h(a) == 1),
        "arc_ar3" => Hv(|e, a| {
            let ar: &dyn Fn(usize) -> bool = &|n| e.aromatic(n);
            e.arom(a, 6) && e.has(a, None, &[(B::Aromatic, ar), (B::Aromatic, ar), (B::Aromatic, ar)])
        }),
        "arc_ar2_single_ar" => Hv(|e, a| arc_ar2(e, a, B::Single, &|n| e.aromatic(n))),
        "arc_ar2_single_c" => Hv(|e, a| arc_ar2(e, a, B::Single, &|n| e.aliph(n, 6))),
        "arc_ar2_single_n" => Hv(|e, a| arc_ar2(e, a, B::Single, &|n| e.aliph(n, 7))),
        "arc_ar2_single_o" => Hv(|e, a| arc_ar2(e, a, B::Single, &|n| e.aliph(n, 8))),
        "arc_ar2_single_s" => Hv(|e, a| arc_ar2(e, a, B::Single, &|n| e.aliph(n, 16))),
        "arc_ar2_dbl_cno" => Hv(|e, a| arc_ar2(e, a, B::Double, &|n| !e.aromatic(n) && matches!(e.z(n), 6 | 7 | 8))),
        "c_dbl_c_ar_al" => Hv(|e, a| {
            e.aliph(a, 6)
                && e.has(
                    a,
                    None,
                    &[(B::Double, &|n| e.aliph(n, 6)), (B::Default, &|n| e.aromatic(n)), (B::Default, &|n| e.aliph_heavy(n))],
                )
        }),
        "c_dbl_c_arc_ar" => Hv(|e, a| {
            e.aliph(a, 6)
                && e.has(
                    a,
                    None,
                    &[(B::Double, &|n| e.aliph(n, 6)), (B::Default, &|n| e.arom(n, 6)), (B::Default, &|n| e.aromatic(n))],
                )
        }),
        "ch1_dbl_c_ar" => Hv(|e, a| {
            e.aliph(a, 6) && e.h(a) == 1 && e.has(a, None, &[(B::Double, &|n| e.aliph(n, 6)), (B::Default, &|n| e.aromatic(n))])
        }),
        "c_dbl_arc" => Hv(|e, a| e.aliph(a, 6) && e.any(a, None, B::Double, &|n| e.arom(n, 6))),
        "cx4_unusual" => Hv(|e, a| {
            e.aliph(a, 6)
                && e.x(a) == 4
                && e.any(a, None, B::Default, &|n| e.aliph_heavy(n) && !matches!(e.z(n), 6 | 7 | 8 | 15 | 16 | 9 | 17 | 35 | 53))
        }),
        "any_c" => Hv(|e, a| e.z(a) == 6),

        // hydrogens, by the atom carrying them
        "h_on_c_or_h" => Hy(|e, p| p.is_some_and(|p| matches!(e.z(p), 6 | 1))),
        "h_alcohol" => Hy(|e, p| {
            p.is_some_and(|p| {
                e.aliph(p, 8) && e.any(p, None, B::Default, &|n| (e.aliph(n, 6) && e.x(n) == 4) || e.arom(n, 6))
            })
        }),
        "h_o_unusual" => Hy(|e, p| {
            p.is_some_and(|p| {
                e.aliph(p, 8)
                    && (e.h(p) >= 2
                        || e.any(p, None, B::Default, &|n| e.aromatic(n) || !matches!(e.z(n), 6 | 7 | 8 | 16)))
            })
        }),
        // the reference implementation types H on aromatic n here as amine H,
        // so this row is matched on element alone
        "h_not_cno" => Hy(|e, p| p.is_some_and(|p| !matches!(e.z(p), 6 | 7 | 8))),
        "h_on_n" => Hy(|e, p| p.is_some_and(|p| e.z(p) == 7)),
        "h_o_n" => Hy(|e, p| p.is_some_and(|p| e.aliph(p, 8) && e.any(p, None, B::Default, &|n| e.z(n) == 7))),
        "h_acid" => Hy(|e, p| {
            p.is_some_and(|p| {
                e.aliph(p, 8)
                    && e.any(p, None, B::Default, &|c| {
                        e.aliph(c, 6)
                            && e.any(c, Some(p), B::Double, &|x| {
                                matches!(e.z(x), 6 | 7) || e.aliph(x, 8) || e.aliph(x, 16)
                            })
                    })
            })
        }),
        "h_o_os" => Hy(|e, p| p.is_some_and(|p| e.aliph(p, 8) && e.any(p, None, B::Default, &|n| e.aliph(n, 8) || e.aliph(n, 16)))),
        "h_any" => Hy(|_, _| true),

        // nitrogen
        "nh2_al" => Hv(|e, a| e.aliph(a, 7) && e.h(a) == 2 && e.q(a) == 0 && e.any(a, None, B::Default, &|n| e.aliph_heavy(n))),
        "nh_al_al" => Hv(|e, a| {
            let al: &dyn Fn(usize) -> bool = &|n| e.aliph_heavy(n);
            e.aliph(a, 7) && e.h(a) == 1 && e.q(a) == 0 && e.has(a, None, &[(B::Default, al), (B::Default, al)])
        }),
        "nh2_ar" => Hv(|e, a| e.aliph(a, 7) && e.h(a) == 2 && e.q(a) == 0 && e.any(a, None, B::Default, &|n| e.aromatic(n))),
        "nh1_any_ar" => Hv(|e, a| {
            e.aliph(a, 7)
                && e.h(a) == 1
                && e.q(a) == 0
                && e.has(a, None, &[(B::Default, &|n| e.heavy(n)), (B::Default, &|n| e.aromatic(n))])
        }),
        "nh_dbl_any" => Hv(|e, a| e.aliph(a, 7) && e.h(a) == 1 && e.q(a) == 0 && e.any(a, None, B::Double, &|n| e.heavy(n))),
        "n_dbl_any_any" => Hv(|e, a| {
            e.aliph(a, 7) && e.q(a) == 0 && e.has(a, None, &[(B::Double, &|n| e.heavy(n)), (B::Default, &|n| e.heavy(n))])
        }),
        "n_al_al_al" => Hv(|e, a| {
            let al: &dyn Fn(usize) -> bool = &|n| e.aliph_heavy(n);
            e.aliph(a, 7) && e.q(a) == 0 && e.has(a, None, &[(B::Default, al), (B::Default, al), (B::Default, al)])
        }),
        "n_ar_any_al" => Hv(|e, a| {
            e.aliph(a, 7)
                && e.q(a) == 0
                && e.has(
                    a,
                    None,
                    &[(B::Default, &|n| e.aromatic(n)), (B::Default, &|n| e.heavy(n)), (B::Default, &|n| e.aliph_heavy(n))],
                )
        }),
        "n_ar_ar_ar" => Hv(|e, a| {
            let ar: &dyn Fn(usize) -> bool = &|n| e.aromatic(n);
            e.aliph(a, 7) && e.q(a) == 0 && e.has(a, None, &[(B::Default, ar), (B::Default, ar), (B::Default, ar)])
        }),
        "n_tpl_al" => Hv(|e, a| e.aliph(a, 7) && e.q(a) == 0 && e.any(a, None, B::Triple, &|n| e.aliph_heavy(n))),
        "nh_cation" => Hv(|e, a| e.aliph(a, 7) && (1..=3).contains(&e.h(a)) && (1..=3).contains(&e.q(a))),
        "arn_neutral" => Hv(|e, a| e.arom(a, 7) && e.q(a) == 0),
        "arn_cation" => Hv(|e, a| e.arom(a, 7) && (1..=3).contains(&e.q(a))),
        "nh0_cation_al4" => Hv(|e, a| {
            let al: &dyn Fn(usize) -> bool = &|n| e.aliph_heavy(n);
            n_cation_h0(e, a) && e.has(a, None, &[(B::Default, al), (B::Default, al), (B::Default, al), (B::Default, al)])
        }),
        "nh0_cation_dbl_al_al_any" => Hv(|e, a| {
            let al: &dyn Fn(usize) -> bool = &|n| e.aliph_heavy(n);
            n_cation_h0(e, a) && e.has(a, None, &[(B::Double, al), (B::Default, al), (B::Default, &|n| e.heavy(n))])
        }),
        "nh0_cation_dbl_c_dbl_n" => Hv(|e, a| {
            n_cation_h0(e, a) && e.has(a, None, &[(B::Double, &|n| e.z(n) == 6), (B::Double, &|n| e.z(n) == 7)])
        }),
        "n_cation_tpl_al" => Hv(|e, a| {
            e.aliph(a, 7) && (1..=3).contains(&e.q(a)) && e.any(a, None, B::Triple, &|n| e.aliph_heavy(n))
        }),
        "n_anion" => Hv(|e, a| e.aliph(a, 7) && (-3..=-1).contains(&e.q(a))),
        "n_cation_dbl_nanion_dbl_n" => Hv(|e, a| {
            e.aliph(a, 7)
                && (1..=3).contains(&e.q(a))
                && e.has(
                    a,
                    None,
                    &[(B::Double, &|n| e.aliph(n, 7) && (-3..=-1).contains(&e.q(n))), (B::Double, &|n| e.aliph(n, 7))],
                )
        }),
        "any_n" => Hv(|e, a| e.z(a) == 7),

        // oxygen
        "aro" => Hv(|e, a| e.arom(a, 8)),
        "oh" => Hv(|e, a| e.aliph(a, 8) && matches!(e.h(a), 1 | 2)),
        "o_al_al" => Hv(|e, a| {
            let al: &dyn Fn(usize) -> bool = &|n| e.aliph_heavy(n);
            e.aliph(a, 8) && e.has(a, None, &[(B::Default, al), (B::Default, al)])
        }),
        "o_ar_any" => Hv(|e, a| {
            e.aliph(a, 8) && e.has(a, None, &[(B::Default, &|n| e.aromatic(n)), (B::Default, &|n| e.heavy(n))])
        }),
        "o_dbl_no" => Hv(|e, a| e.aliph(a, 8) && e.any(a, None, B::Double, &|n| matches!(e.z(n), 7 | 8))),
        "ox1_anion_n" => Hv(|e, a| {
            e.aliph(a, 8) && e.x(a) == 1 && (-3..=-1).contains(&e.q(a)) && e.any(a, None, B::Default, &|n| e.z(n) == 7)
        }),
        "ox1_anion_s" => Hv(|e, a| {
            e.aliph(a, 8) && e.x(a) == 1 && (-2..=-1).contains(&e.q(a)) && e.any(a, None, B::Default, &|n| e.z(n) == 16)
        }),
        "o_dbl_s" => Hv(|e, a| e.aliph(a, 8) && e.q(a) == 0 && e.any(a, None, B::Double, &|n| e.z(n) == 16 && e.q(n) == 0)),
        "o_anion_carboxylate" => Hv(|e, a| {
            e.aliph(a, 8)
                && e.q(a) == -1
                && e.any(a, None, B::Default, &|c| e.aliph(c, 6) && e.any(c, Some(a), B::Double, &|o| e.aliph(o, 8)))
        }),
        "ox1_anion_other" => Hv(|e, a| {
            e.aliph(a, 8)
                && e.x(a) == 1
                && (-3..=-1).contains(&e.q(a))
                && e.any(a, None, B::Default, &|n| e.heavy(n) && !e.aliph(n, 7) && !e.aliph(n, 16))
        }),
        "o_dbl_arc" => Hv(|e, a| e.aliph(a, 8) && e.any(a, None, B::Double, &|n| e.arom(n, 6))),
        "o_dbl_ch_c" => Hv(|e, a| {
            e.aliph(a, 8)
                && e.any(a, None, B::Double, &|c| e.aliph(c, 6) && e.h(c) == 1 && e.any(c, Some(a), B::Default, &|n| e.aliph(n, 6)))
        }),
        "o_dbl_c_c_al" => Hv(|e, a| {
            e.aliph(a, 8)
                && e.any(a, None, B::Double, &|c| {
                    e.aliph(c, 6)
                        && e.has(c, Some(a), &[(B::Default, &|n| e.aliph(n, 6)), (B::Default, &|n| e.aliph_heavy(n))])
                })
        }),
        "o_dbl_ch_no" => Hv(|e, a| {
            e.aliph(a, 8)
                && e.any(a, None, B::Double, &|c| {
                    e.aliph(c, 6) && e.h(c) == 1 && e.any(c, Some(a), B::Default, &|n| e.aliph(n, 7) || e.aliph(n, 8))
                })
        }),
        "o_dbl_ch2" => Hv(|e, a| e.aliph(a, 8) && e.any(a, None, B::Double, &|c| e.aliph(c, 6) && e.h(c) == 2)),
        "o_dbl_cx2_dbl_o" => Hv(|e, a| {
            e.aliph(a, 8)
                && e.any(a, None, B::Double, &|c| {
                    e.aliph(c, 6) && e.x(c) == 2 && e.any(c, Some(a), B::Double, &|o| e.aliph(o, 8))
                })
        }),
        "o_dbl_ch_arc" => Hv(|e, a| {
            e.aliph(a, 8)
                && e.any(a, None, B::Double, &|c| e.aliph(c, 6) && e.h(c) == 1 && e.any(c, Some(a), B::Default, &|n| e.arom(n, 6)))
        }),
        "o_dbl_c_anyc_ar" => Hv(|e, a| {
            e.aliph(a, 8)
                && e.any(a, None, B::Double, &|c| {
                    e.aliph(c, 6) && e.has(c, Some(a), &[(B::Default, &|n| e.z(n) == 6), (B::Default, &|n| e.aromatic(n))])
                })
        }),
        "o_dbl_c_arc_al" => Hv(|e, a| {
            e.aliph(a, 8)
                && e.any(a, None, B::Double, &|c| {
                    e.aliph(c, 6) && e.has(c, Some(a), &[(B::Default, &|n| e.arom(n, 6)), (B::Default, &|n| e.aliph_heavy(n))])
                })
        }),
        "o_dbl_c_het_het" => Hv(|e, a| {
            e.aliph(a, 8)
                && e.any(a, None, B::Double, &|c| {
                    let het: &dyn Fn(usize) -> bool = &|n| e.heavy(n) && e.z(n) != 6;
                    e.aliph(c, 6) && e.has(c, Some(a), &[(B::Default, het), (B::Default, het)])
                })
        }),
        "any_o" => Hv(|e, a| e.z(a) == 8),

        // halogens and the rest
        "f_neutral" => Hv(|e, a| e.z(a) == 9 && e.q(a) == 0),
        "cl_neutral" => Hv(|e, a| e.z(a) == 17 && e.q(a) == 0),
        "br_neutral" => Hv(|e, a| e.z(a) == 35 && e.q(a) == 0),
        "i_neutral" => Hv(|e, a| e.z(a) == 53 && e.q(a) == 0),
        "halide_anion" => Hv(|e, a| matches!(e.z(a), 9 | 17 | 35 | 53) && e.q(a) == -1),
        "iodine_cation" => Hv(|e, a| e.z(a) == 53 && (1..=3).contains(&e.q(a))),
        "alkali_cation" => Hv(|e, a| matches!(e.z(a), 3 | 11 | 19 | 37 | 55) && e.q(a) == 1),
        "any_p" => Hv(|e, a| e.z(a) == 15),
        "s_charged" => Hv(|e, a| e.aliph(a, 16) && matches!(e.q(a), -4..=-1 | 1..=3 | 5 | 6)),
        "s_dbl_nops" => Hv(|e, a| {
            e.aliph(a, 16) && e.q(a) == 0 && e.any(a, None, B::Double, &|n| !e.aromatic(n) && matches!(e.z(n), 7 | 8 | 15 | 16))
        }),
        "s_aliphatic" => Hv(|e, a| e.aliph(a, 16)),
        "ars" => Hv(|e, a| e.arom(a, 16)),
        "group1" => Hv(|e, a| matches!(e.z(a), 3 | 11 | 19 | 37 | 55)),
        "group2" => Hv(|e, a| matches!(e.z(a), 4 | 12 | 20 | 38 | 56)),
        "group13" => Hv(|e, a| matches!(e.z(a), 5 | 13 | 31 | 49 | 81)),
        "group14" => Hv(|e, a| matches!(e.z(a), 14 | 32 | 50 | 82)),
        "group15" => Hv(|e, a| matches!(e.z(a), 33 | 51 | 83)),
        "group16" => Hv(|e, a| matches!(e.z(a), 34 | 52 | 84)),
        "transition_4" => Hv(|e, a| (21..=30).contains(&e.z(a))),
        "transition_5" => Hv(|e, a| (39..=48).contains(&e.z(a))),
        "transition_6" => Hv(|e, a| (72..=80).contains(&e.z(a))),
        _ => return None,
    };
    Some(t)
}

fn arc_ar2(e: &Env, a: usize, bond: B, third: &dyn Fn(usize) -> bool) -> bool {
    let ar: &dyn Fn(usize) -> bool = &|n| e.aromatic(n);
    e.arom(a, 6) && e.has(a, None, &[(B::Aromatic, ar), (B::Aromatic, ar), (bond, third)])
}

fn n_cation_h0(e: &Env, a: usize) -> bool {
    e.aliph(a, 7) && e.h(a) == 0 && (1..=3).contains(&e.q(a))
}
