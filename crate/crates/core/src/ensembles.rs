//! Builders for uncoupled, single-chain and connected-chain ensembles.
//!
//! A coupled chain `C(J,K,L)` has `b = K/J` variable classes at each of the
//! positions `1..=L` and `L + J - 1` checks. A variable at position `t` has one
//! edge to each of checks `t-1, ..., t+J-2` (0-based), so the first and last
//! `J - 1` checks are deficient with degrees `b, 2b, ..., (J-1)b`.
//!
//! Connected ensembles raise the deficient checks at a chain end by attaching
//! them to variables in a window of three consecutive positions of another
//! chain (see [`EnsembleBuilder::attach_chain_end`]).

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

use crate::protograph::{Position, Protograph, ProtographBuilder};
use crate::{Error, Result};

/// Number of host positions receiving a chain-end connection.
pub const WINDOW: usize = 3;

/// How far the deficient checks of a chain end are raised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConnectionStyle {
    /// Every deficient check is raised to degree `K` (the (3,6) pattern and the
    /// (4,8) type A connection).
    Full,
    /// Every deficient check is raised to degree `K - K/J` (the (4,8) type B
    /// connection: three checks of degree 6, six hosts of degree 5).
    Light,
}

/// Which end of a chain donates its deficient checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChainEnd {
    Leading,
    Trailing,
}

/// Index bookkeeping for one coupled chain inside a larger protograph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Chain {
    pub id: u32,
    pub j: usize,
    pub k: usize,
    pub len: usize,
    pub var_offset: usize,
    pub check_offset: usize,
}

impl Chain {
    /// Variable classes per position, `K/J`.
    pub fn per_position(&self) -> usize {
        self.k / self.j
    }

    pub fn num_vars(&self) -> usize {
        self.len * self.per_position()
    }

    pub fn num_checks(&self) -> usize {
        self.len + self.j - 1
    }

    /// Variables at 1-based position `pos`.
    pub fn vars_at(&self, pos: usize) -> Range<usize> {
        debug_assert!((1..=self.len).contains(&pos));
        let b = self.per_position();
        let start = self.var_offset + (pos - 1) * b;
        start..start + b
    }

    /// Global index of the chain's `i`-th check (0-based).
    pub fn check(&self, i: usize) -> usize {
        self.check_offset + i
    }

    /// Deficient checks at one end, most deficient first.
    pub fn deficient_checks(&self, end: ChainEnd) -> Vec<usize> {
        let n = self.j - 1;
        match end {
            ChainEnd::Leading => (0..n).map(|i| self.check(i)).collect(),
            ChainEnd::Trailing => (0..n).map(|i| self.check(self.num_checks() - 1 - i)).collect(),
        }
    }
}

fn check_profile(j: usize, k: usize) -> Result<()> {
    if j == 0 || k == 0 || !k.is_multiple_of(j) {
        return Err(Error::UnsupportedProfile { j, k });
    }
    Ok(())
}

/// Accumulates chains and connections into one protograph.
#[derive(Debug, Clone)]
pub struct EnsembleBuilder {
    inner: ProtographBuilder,
    raised: BTreeSet<usize>,
    chains: Vec<Chain>,
}

impl EnsembleBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        EnsembleBuilder {
            inner: ProtographBuilder::new(name),
            raised: BTreeSet::new(),
            chains: Vec::new(),
        }
    }

    pub fn chains(&self) -> &[Chain] {
        &self.chains
    }

    /// Appends a coupled chain `C(J,K,len)`.
    pub fn add_chain(&mut self, j: usize, k: usize, len: usize) -> Result<Chain> {
        check_profile(j, k)?;
        if len < j {
            return Err(Error::ChainTooShort { j, l: len });
        }
        let b = k / j;
        let chain = Chain {
            id: self.chains.len() as u32,
            j,
            k,
            len,
            var_offset: self.inner.add_vars(len * b),
            check_offset: self.inner.add_checks(len + j - 1),
        };
        for pos in 1..=len {
            for v in chain.vars_at(pos) {
                self.inner.set_position(
                    v,
                    Position {
                        chain: chain.id,
                        index: pos as u32,
                    },
                );
                for shift in 0..j {
                    self.inner.add_edge(chain.check(pos - 1 + shift), v, 1);
                }
            }
        }
        self.chains.push(chain);
        Ok(chain)
    }

    /// Raises the deficient checks at `end` of `donor` by new single edges to
    /// the variables at positions `center - 1 ..= center + 1` of `host`.
    ///
    /// Checks are served most deficient first. Host variables are visited
    /// cyclically in window order (position `center - 1` first), so every
    /// host variable gains the same number of edges and no check reaches a
    /// host twice.
    /// Returns the number of edges added.
    pub fn attach_chain_end(
        &mut self,
        donor: &Chain,
        end: ChainEnd,
        host: &Chain,
        center: usize,
        style: ConnectionStyle,
    ) -> Result<usize> {
        if center < 2 || center + 1 > host.len {
            return Err(Error::Geometry(format!(
                "window centred at {center} does not fit a chain of length {}",
                host.len
            )));
        }
        let hosts: Vec<usize> = (center - 1..=center + 1).flat_map(|p| host.vars_at(p)).collect();
        if let Some(&var) = hosts.iter().find(|v| self.raised.contains(v)) {
            return Err(Error::HostSaturated { var });
        }

        let b = donor.per_position();
        let target = match style {
            ConnectionStyle::Full => donor.k,
            ConnectionStyle::Light => donor.k - b,
        };
        let checks = donor.deficient_checks(end);
        let needs: Vec<usize> = (0..checks.len())
            .map(|i| target.saturating_sub((i + 1) * b))
            .collect();
        let total: usize = needs.iter().sum();
        if !total.is_multiple_of(hosts.len()) || needs.iter().any(|&n| n > hosts.len()) {
            return Err(Error::Geometry(format!(
                "{total} connection edges cannot be spread evenly over {} host variables",
                hosts.len()
            )));
        }
        let mut cursor = 0;
        for (&check, &need) in checks.iter().zip(&needs) {
            for _ in 0..need {
                self.inner.add_edge(check, hosts[cursor % hosts.len()], 1);
                cursor += 1;
            }
        }
        self.raised.extend(hosts);
        Ok(total)
    }

    /// Adds `mult` parallel edges between an existing check and variable.
    pub fn add_edge(&mut self, check: usize, var: usize, mult: u32) {
        self.inner.add_edge(check, var, mult);
    }

    pub fn finish(self) -> Protograph {
        self.inner.build()
    }
}

/// Single uncoupled `(J,K)`-regular block protograph: one check and `K/J`
/// variables, each joined to it by `J` parallel edges.
pub fn build_uncoupled(j: usize, k: usize) -> Result<Protograph> {
    check_profile(j, k)?;
    let mut b = ProtographBuilder::new(format!("B({j},{k})"));
    let c = b.add_checks(1);
    let first = b.add_vars(k / j);
    for v in first..first + k / j {
        b.add_edge(c, v, j as u32);
        b.set_position(v, Position { chain: 0, index: 1 });
    }
    Ok(b.build())
}

/// Single coupled chain `C(J,K,L)`.
pub fn build_chain(j: usize, k: usize, len: usize) -> Result<Protograph> {
    let mut b = EnsembleBuilder::new(format!("C({j},{k},{len})"));
    b.add_chain(j, k, len)?;
    Ok(b.finish())
}

/// Default connection offset of a loop, `floor(L/3)`.
pub fn default_offset(len: usize) -> usize {
    len / 3
}

/// Loop of two `C(J,K,L)` chains.
///
/// The leading end of chain 2 attaches into chain 1 around position `h`; the
/// trailing end of chain 1 attaches into chain 2 around position `L - h + 1`,
/// which makes the layout symmetric under a half-turn. `h` defaults to
/// `floor(L/3)`.
pub fn build_loop(
    j: usize,
    k: usize,
    len: usize,
    h: Option<usize>,
    style: ConnectionStyle,
) -> Result<Protograph> {
    let offset = h.unwrap_or_else(|| default_offset(len));
    let prefix = match (j, k, style) {
        (4, 8, ConnectionStyle::Full) => "LA",
        (4, 8, ConnectionStyle::Light) => "LB",
        _ => "L",
    };
    let name = match h {
        Some(h) => format!("{prefix}({j},{k},{len},h={h})"),
        None => format!("{prefix}({j},{k},{len})"),
    };
    let h = offset;
    check_profile(j, k)?;
    if len < j {
        return Err(Error::ChainTooShort { j, l: len });
    }
    if h < 2 || h + 1 > len {
        return Err(Error::Geometry(format!(
            "loop offset h={h} needs 2 <= h <= L-1 (L={len})"
        )));
    }
    let mut b = EnsembleBuilder::new(name);
    let first = b.add_chain(j, k, len)?;
    let second = b.add_chain(j, k, len)?;
    b.attach_chain_end(&second, ChainEnd::Leading, &first, h, style)?;
    b.attach_chain_end(&first, ChainEnd::Trailing, &second, len - h + 1, style)?;
    Ok(b.finish())
}

/// Square `S(3,6,L)`: two horizontal `C(3,6,L)` chains joined by two bridge
/// chains `C(3,6,L/2)`. Bridge ends attach around the `floor(L/4)`-th position
/// from the respective end of each horizontal chain.
pub fn build_square(len: usize) -> Result<Protograph> {
    if !len.is_multiple_of(2) || len < 8 {
        return Err(Error::Geometry(format!(
            "square needs an even L >= 8, got {len}"
        )));
    }
    let mut b = EnsembleBuilder::new(format!("S(3,6,{len})"));
    let top = b.add_chain(3, 6, len)?;
    let bottom = b.add_chain(3, 6, len)?;
    let left = b.add_chain(3, 6, len / 2)?;
    let right = b.add_chain(3, 6, len / 2)?;
    let near = len / 4;
    let far = len + 1 - near;
    let full = ConnectionStyle::Full;
    b.attach_chain_end(&left, ChainEnd::Leading, &top, near, full)?;
    b.attach_chain_end(&left, ChainEnd::Trailing, &bottom, near, full)?;
    b.attach_chain_end(&right, ChainEnd::Leading, &top, far, full)?;
    b.attach_chain_end(&right, ChainEnd::Trailing, &bottom, far, full)?;
    Ok(b.finish())
}

/// Mixed loops of a (3,6) chain and a (4,8) chain of equal length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MixedVariant {
    /// The (4,8) end is raised to degree 8 by 12 edges into the (3,6) chain
    /// window at positions `floor(L/3) ..= floor(L/3) + 2`.
    L1,
    /// The 12 edges from the (4,8) end are spread: its degree-2 check gains 6
    /// edges to position `L-2`, its degree-4 check 4 edges to position 3 and
    /// its degree-6 check 2 edges to position 2 of the (3,6) chain.
    L2,
}

/// Mixed loop `L1(3,6,4,8,L)` or `L2(3,6,4,8,L)`.
///
/// The trailing end of each chain attaches into the other chain; the (3,6)
/// end always uses the window centred at `floor(L/3)` of the (4,8) chain.
pub fn build_mixed_loop(variant: MixedVariant, len: usize) -> Result<Protograph> {
    let h = default_offset(len);
    if len < 6 || h < 2 {
        return Err(Error::Geometry(format!(
            "mixed loop needs L >= 6 for disjoint windows, got {len}"
        )));
    }
    let tag = match variant {
        MixedVariant::L1 => "L1",
        MixedVariant::L2 => "L2",
    };
    let mut b = EnsembleBuilder::new(format!("{tag}(3,6,4,8,{len})"));
    let light = b.add_chain(3, 6, len)?;
    let dense = b.add_chain(4, 8, len)?;
    b.attach_chain_end(&light, ChainEnd::Trailing, &dense, h, ConnectionStyle::Full)?;
    match variant {
        MixedVariant::L1 => {
            b.attach_chain_end(&dense, ChainEnd::Trailing, &light, h + 1, ConnectionStyle::Full)?;
        }
        MixedVariant::L2 => {
            let checks = dense.deficient_checks(ChainEnd::Trailing);
            let db = dense.per_position();
            let spread = [len - 2, 3, 2];
            for (i, (&check, &pos)) in checks.iter().zip(&spread).enumerate() {
                let need = dense.k - (i + 1) * db;
                let vars = light.vars_at(pos);
                let mult = (need / vars.len()) as u32;
                for v in vars {
                    b.add_edge(check, v, mult);
                }
            }
        }
    }
    Ok(b.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn chain_3_6_8_matches_printed_base_matrix() {
        #[rustfmt::skip]
        let rows: [[u32; 16]; 10] = [
            [1,1,0,0,0,0,0,0,0,0,0,0,0,0,0,0],
            [1,1,1,1,0,0,0,0,0,0,0,0,0,0,0,0],
            [1,1,1,1,1,1,0,0,0,0,0,0,0,0,0,0],
            [0,0,1,1,1,1,1,1,0,0,0,0,0,0,0,0],
            [0,0,0,0,1,1,1,1,1,1,0,0,0,0,0,0],
            [0,0,0,0,0,0,1,1,1,1,1,1,0,0,0,0],
            [0,0,0,0,0,0,0,0,1,1,1,1,1,1,0,0],
            [0,0,0,0,0,0,0,0,0,0,1,1,1,1,1,1],
            [0,0,0,0,0,0,0,0,0,0,0,0,1,1,1,1],
            [0,0,0,0,0,0,0,0,0,0,0,0,0,0,1,1],
        ];
        let p = build_chain(3, 6, 8).unwrap();
        let expected: Vec<Vec<u32>> = rows.iter().map(|r| r.to_vec()).collect();
        assert_eq!(p.base_matrix(), expected);
    }

    #[test]
    fn uncoupled_profiles() {
        let p = build_uncoupled(3, 6).unwrap();
        assert_eq!((p.num_checks(), p.num_vars()), (1, 2));
        assert!(p.edges().iter().all(|e| e.mult == 3));
        let r = p.design_rate().unwrap();
        assert_eq!((r.numerator, r.denominator), (1, 2));

        let p = build_uncoupled(3, 9).unwrap();
        assert_eq!(p.num_vars(), 3);
        let r = p.design_rate().unwrap();
        assert_eq!((r.numerator, r.denominator), (2, 3));

        assert_eq!(
            build_uncoupled(3, 7),
            Err(Error::UnsupportedProfile { j: 3, k: 7 })
        );
    }

    #[test]
    fn chain_4_8_6_profile() {
        let p = build_chain(4, 8, 6).unwrap();
        assert_eq!((p.num_vars(), p.num_checks()), (12, 9));
        let deg = p.check_degrees();
        assert_eq!(&deg[6..], &[6, 4, 2]);
        assert_eq!(&deg[..3], &[2, 4, 6]);
        assert!((p.design_rate().unwrap().value() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn chain_3_9_6_profile() {
        let p = build_chain(3, 9, 6).unwrap();
        assert_eq!((p.num_vars(), p.num_checks()), (18, 8));
        assert!((p.design_rate().unwrap().value() - 0.5556).abs() < 1e-4);
    }

    #[test]
    fn chain_too_short() {
        assert_eq!(build_chain(3, 6, 2), Err(Error::ChainTooShort { j: 3, l: 2 }));
    }

    #[test]
    fn three_six_connection_degrees() {
        let mut b = EnsembleBuilder::new("t");
        let host = b.add_chain(3, 6, 10).unwrap();
        let donor = b.add_chain(3, 6, 10).unwrap();
        let added = b
            .attach_chain_end(&donor, ChainEnd::Leading, &host, 5, ConnectionStyle::Full)
            .unwrap();
        assert_eq!(added, 6);
        let p = b.finish();
        let cd = p.check_degrees();
        assert_eq!(cd[donor.check(0)], 6);
        assert_eq!(cd[donor.check(1)], 6);
        let vd = p.var_degrees();
        let raised: Vec<usize> = (4..=6).flat_map(|t| host.vars_at(t)).collect();
        assert!(raised.iter().all(|&v| vd[v] == 4));
        // most deficient check took four of the six hosts
        let from_first = p.edges().iter().filter(|e| e.check == donor.check(0) && e.var < host.num_vars()).count();
        assert_eq!(from_first, 4);
    }

    #[test]
    fn four_eight_connection_types() {
        for (style, added, check_deg, host_deg) in [
            (ConnectionStyle::Full, 12, 8, 6),
            (ConnectionStyle::Light, 6, 6, 5),
        ] {
            let mut b = EnsembleBuilder::new("t");
            let host = b.add_chain(4, 8, 12).unwrap();
            let donor = b.add_chain(4, 8, 12).unwrap();
            let n = b
                .attach_chain_end(&donor, ChainEnd::Trailing, &host, 4, style)
                .unwrap();
            assert_eq!(n, added);
            let p = b.finish();
            let cd = p.check_degrees();
            for c in donor.deficient_checks(ChainEnd::Trailing) {
                assert_eq!(cd[c], check_deg);
            }
            let vd = p.var_degrees();
            for t in 3..=5 {
                for v in host.vars_at(t) {
                    assert_eq!(vd[v], host_deg);
                }
            }
            assert!(p.edges().iter().all(|e| e.mult == 1));
        }
    }

    #[test]
    fn saturated_host_is_rejected() {
        let mut b = EnsembleBuilder::new("t");
        let host = b.add_chain(3, 6, 10).unwrap();
        let d1 = b.add_chain(3, 6, 10).unwrap();
        let d2 = b.add_chain(3, 6, 10).unwrap();
        b.attach_chain_end(&d1, ChainEnd::Leading, &host, 5, ConnectionStyle::Full)
            .unwrap();
        let err = b.attach_chain_end(&d2, ChainEnd::Leading, &host, 6, ConnectionStyle::Full);
        assert!(matches!(err, Err(Error::HostSaturated { .. })));
        let err = b.attach_chain_end(&d2, ChainEnd::Leading, &host, 10, ConnectionStyle::Full);
        assert!(matches!(err, Err(Error::Geometry(_))));
    }

    #[test]
    fn loop_3_6_15_counts() {
        let p = build_loop(3, 6, 15, Some(5), ConnectionStyle::Full).unwrap();
        assert_eq!((p.num_vars(), p.num_checks()), (60, 34));
        assert_eq!(p.total_edges(), 192);
        let report = p.validate();
        assert!(report.is_ok(), "{:?}", report.issues);
        // hosts in chain 1 at positions 4..=6
        for v in 6..12 {
            assert_eq!(report.var_degrees[v], 4);
        }
        assert!(matches!(
            build_loop(3, 6, 15, Some(1), ConnectionStyle::Full),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn loop_rates_match_chain_rates() {
        for len in [12usize, 15, 18] {
            let lp = build_loop(3, 6, len, None, ConnectionStyle::Full).unwrap();
            let r = lp.design_rate().unwrap();
            let chain = crate::DesignRate::reduced(len as i64 - 2, 2 * len as i64);
            assert_eq!(r, chain);
        }
        let l39 = build_loop(3, 9, 12, None, ConnectionStyle::Full).unwrap();
        assert!((l39.design_rate().unwrap().value() - 0.6111).abs() < 1e-4);
    }

    #[test]
    fn square_counts_and_rates() {
        let p = build_square(8).unwrap();
        assert_eq!((p.num_vars(), p.num_checks()), (48, 32));
        let r = p.design_rate().unwrap();
        assert_eq!((r.numerator, r.denominator), (1, 3));
        let r = build_square(12).unwrap().design_rate().unwrap();
        assert_eq!((r.numerator, r.denominator), (7, 18));
        let r = build_square(24).unwrap().design_rate().unwrap();
        assert_eq!((r.numerator, r.denominator), (4, 9));
        assert!(build_square(7).is_err());
        assert!(build_square(6).is_err());
        assert!(build_square(24).unwrap().validate().is_ok());
    }

    #[test]
    fn mixed_loops() {
        for variant in [MixedVariant::L1, MixedVariant::L2] {
            let p = build_mixed_loop(variant, 15).unwrap();
            assert!((p.design_rate().unwrap().value() - 0.417).abs() < 5e-4);
            assert!(p.validate().is_ok());
            let cd = p.check_degrees();
            let vd = p.var_degrees();
            // (4,8) chain checks start after the 17 checks of the (3,6) chain
            let dense_last = 17 + 17;
            assert_eq!(vec![cd[dense_last - 2], cd[dense_last - 1], cd[dense_last]], vec![8, 8, 8]);
            if variant == MixedVariant::L2 {
                // position 13 of the (3,6) chain: two vars, three edges each
                assert_eq!(p.multiplicity(dense_last, 24), 3);
                assert_eq!(p.multiplicity(dense_last, 25), 3);
                assert_eq!(vd[24], 6);
                assert_eq!(p.multiplicity(dense_last - 1, 4), 2);
                assert_eq!(p.multiplicity(dense_last - 2, 2), 1);
            }
        }
        assert!(build_mixed_loop(MixedVariant::L1, 5).is_err());
    }
}
