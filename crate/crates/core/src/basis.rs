//! Fixed-particle-number Fock sectors on a ring of `L` sites.
//!
//! States are packed into a single `u128` word. Fermions use one bit per
//! site (bit `x - 1` is site `x`), bosons one byte per site (byte `x - 1` is
//! the occupation of site `x`). This bounds fermion rings to 128 sites and
//! boson rings to 16 sites with at most 255 particles per site, far beyond
//! what exact diagonalization can reach anyway.
//!
//! Every sector is ordered lexicographically *descending* on the occupation
//! vector `(n_1, ..., n_L)`: the state with all particles on site 1 comes
//! first. The order does not depend on threads or platform.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const MAX_FERMION_SITES: usize = 128;
pub const MAX_BOSON_SITES: usize = 16;
pub const MAX_BOSON_OCCUPATION: u32 = u8::MAX as u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistics {
    Fermion,
    Boson,
}

impl Statistics {
    /// `+1` for the anticommutator (fermions), `-1` for the commutator (bosons).
    pub fn exchange_sign(self) -> f64 {
        match self {
            Statistics::Fermion => 1.0,
            Statistics::Boson => -1.0,
        }
    }

    fn max_sites(self) -> usize {
        match self {
            Statistics::Fermion => MAX_FERMION_SITES,
            Statistics::Boson => MAX_BOSON_SITES,
        }
    }
}

impl fmt::Display for Statistics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statistics::Fermion => f.write_str("fermion"),
            Statistics::Boson => f.write_str("boson"),
        }
    }
}

/// An occupation-number configuration of `L` sites.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct FockState {
    word: u128,
    sites: u8,
    statistics: Statistics,
}

impl FockState {
    pub fn vacuum(sites: usize, statistics: Statistics) -> Result<Self> {
        check_sites(sites, statistics)?;
        Ok(Self {
            word: 0,
            sites: sites as u8,
            statistics,
        })
    }

    /// Builds a state from occupations listed for sites `1..=L` in order.
    pub fn from_occupations(statistics: Statistics, occupations: &[u32]) -> Result<Self> {
        let mut state = Self::vacuum(occupations.len(), statistics)?;
        for (i, &occ) in occupations.iter().enumerate() {
            let limit = match statistics {
                Statistics::Fermion => 1,
                Statistics::Boson => MAX_BOSON_OCCUPATION,
            };
            if occ > limit {
                return Err(Error::InvalidArguments(format!(
                    "occupation {occ} at site {} exceeds {limit} for {statistics}s",
                    i + 1
                )));
            }
            state = state.with_occupation(i + 1, occ);
        }
        Ok(state)
    }

    /// Fermion state with the given (1-based) sites occupied.
    pub fn fermions(sites: usize, occupied: &[usize]) -> Result<Self> {
        let mut occ = vec![0; sites];
        for &x in occupied {
            if x == 0 || x > sites {
                return Err(Error::InvalidArguments(format!(
                    "site {x} outside 1..={sites}"
                )));
            }
            occ[x - 1] += 1;
        }
        Self::from_occupations(Statistics::Fermion, &occ)
    }

    pub fn sites(&self) -> usize {
        self.sites as usize
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    /// Occupation of site `x` (1-based).
    #[inline]
    pub fn occupation(&self, x: usize) -> u32 {
        debug_assert!(x >= 1 && x <= self.sites());
        match self.statistics {
            Statistics::Fermion => ((self.word >> (x - 1)) & 1) as u32,
            Statistics::Boson => ((self.word >> (8 * (x - 1))) & 0xff) as u32,
        }
    }

    pub fn occupations(&self) -> Vec<u32> {
        (1..=self.sites()).map(|x| self.occupation(x)).collect()
    }

    /// Total particle number `N`.
    pub fn number(&self) -> u32 {
        match self.statistics {
            Statistics::Fermion => self.word.count_ones(),
            Statistics::Boson => self.word.to_le_bytes().iter().map(|&b| b as u32).sum(),
        }
    }

    /// Dipole moment `D = sum_x x N_x`, not reduced modulo `L`.
    pub fn dipole(&self) -> u64 {
        (1..=self.sites())
            .map(|x| x as u64 * self.occupation(x) as u64)
            .sum()
    }

    /// Number of particles sitting on sites with label strictly below `x`.
    #[inline]
    pub(crate) fn occupied_below(&self, x: usize) -> u32 {
        match self.statistics {
            Statistics::Fermion => {
                let mask = (1u128 << (x - 1)) - 1;
                (self.word & mask).count_ones()
            }
            Statistics::Boson => (1..x).map(|y| self.occupation(y)).sum(),
        }
    }

    #[inline]
    pub(crate) fn with_occupation(&self, x: usize, value: u32) -> Self {
        let word = match self.statistics {
            Statistics::Fermion => {
                let bit = 1u128 << (x - 1);
                if value == 0 {
                    self.word & !bit
                } else {
                    self.word | bit
                }
            }
            Statistics::Boson => {
                let shift = 8 * (x - 1);
                (self.word & !(0xffu128 << shift)) | ((value as u128) << shift)
            }
        };
        Self { word, ..*self }
    }

    /// Key whose numeric order equals lexicographic order of the occupation vector.
    #[inline]
    pub(crate) fn lex_key(&self) -> u128 {
        match self.statistics {
            Statistics::Fermion => self.word.reverse_bits(),
            Statistics::Boson => self.word.swap_bytes(),
        }
    }
}

impl fmt::Debug for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for x in 1..=self.sites() {
            write!(f, "{}", self.occupation(x))?;
            if self.statistics == Statistics::Boson && x < self.sites() {
                write!(f, ",")?;
            }
        }
        write!(f, ">")
    }
}

fn check_sites(sites: usize, statistics: Statistics) -> Result<()> {
    if sites == 0 || sites > statistics.max_sites() {
        return Err(Error::InvalidArguments(format!(
            "{statistics} rings need 1..={} sites, got {sites}",
            statistics.max_sites()
        )));
    }
    Ok(())
}

pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Closed-form dimension of the unrestricted n-particle sector.
pub fn sector_dimension(sites: usize, particles: usize, statistics: Statistics) -> u128 {
    match statistics {
        Statistics::Fermion => binomial(sites as u64, particles as u64),
        Statistics::Boson => binomial((sites + particles) as u64 - 1, particles as u64),
    }
}

/// All n-particle states of a ring, optionally restricted to one dipole
/// class `D mod L`, with exact state-to-index lookup.
#[derive(Clone)]
pub struct SectorBasis {
    sites: usize,
    particles: usize,
    statistics: Statistics,
    dipole_class: Option<usize>,
    states: Vec<FockState>,
    // lex keys, strictly descending, parallel to `states`
    keys: Vec<u128>,
}

impl SectorBasis {
    pub fn new(
        sites: usize,
        particles: usize,
        statistics: Statistics,
        dipole_class: Option<usize>,
    ) -> Result<Self> {
        check_sites(sites, statistics)?;
        if statistics == Statistics::Fermion && particles > sites {
            return Err(Error::InvalidArguments(format!(
                "{particles} fermions do not fit on {sites} sites"
            )));
        }
        if statistics == Statistics::Boson && particles > MAX_BOSON_OCCUPATION as usize {
            return Err(Error::InvalidArguments(format!(
                "at most {MAX_BOSON_OCCUPATION} bosons supported, got {particles}"
            )));
        }
        if let Some(d) = dipole_class {
            if d >= sites {
                return Err(Error::InvalidArguments(format!(
                    "dipole class {d} outside 0..{sites}"
                )));
            }
        }

        let mut states = Vec::new();
        let vacuum = FockState::vacuum(sites, statistics)?;
        let cap = match statistics {
            Statistics::Fermion => 1,
            Statistics::Boson => particles as u32,
        };
        fill(
            vacuum,
            1,
            particles as u32,
            cap,
            0,
            sites,
            dipole_class,
            &mut states,
        );
        let keys = states.iter().map(FockState::lex_key).collect();
        Ok(Self {
            sites,
            particles,
            statistics,
            dipole_class,
            states,
            keys,
        })
    }

    /// The same sector without a dipole restriction.
    pub fn unrestricted(&self) -> Result<Self> {
        Self::new(self.sites, self.particles, self.statistics, None)
    }

    /// Sector with `particles + delta` particles and no dipole restriction.
    pub fn shifted(&self, delta: isize) -> Result<Self> {
        let n = self.particles as isize + delta;
        if n < 0 {
            return Err(Error::InvalidArguments("negative particle number".into()));
        }
        Self::new(self.sites, n as usize, self.statistics, None)
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    pub fn dipole_class(&self) -> Option<usize> {
        self.dipole_class
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[FockState] {
        &self.states
    }

    #[inline]
    pub fn state(&self, index: usize) -> FockState {
        self.states[index]
    }

    #[inline]
    pub fn index_of(&self, state: &FockState) -> Option<usize> {
        if state.sites() != self.sites || state.statistics() != self.statistics {
            return None;
        }
        let key = state.lex_key();
        self.keys.binary_search_by(|k| key.cmp(k)).ok()
    }

    /// Compact description used for equality and diagnostics.
    pub fn label(&self) -> SectorLabel {
        SectorLabel {
            sites: self.sites,
            particles: self.particles,
            statistics: self.statistics,
            dipole_class: self.dipole_class,
        }
    }
}

impl PartialEq for SectorBasis {
    // Enumeration is deterministic, so the label fixes the state list.
    fn eq(&self, other: &Self) -> bool {
        self.label() == other.label()
    }
}

impl fmt::Debug for SectorBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} (dim {})", self.label(), self.dim())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SectorLabel {
    pub sites: usize,
    pub particles: usize,
    pub statistics: Statistics,
    pub dipole_class: Option<usize>,
}

#[allow(clippy::too_many_arguments)]
fn fill(
    state: FockState,
    site: usize,
    remaining: u32,
    cap: u32,
    dipole: u64,
    sites: usize,
    class: Option<usize>,
    out: &mut Vec<FockState>,
) {
    if site > sites {
        if remaining == 0 && class.map_or(true, |d| dipole % sites as u64 == d as u64) {
            out.push(state);
        }
        return;
    }
    let left = (sites - site + 1) as u32;
    if cap == 1 && remaining > left {
        return;
    }
    for occ in (0..=remaining.min(cap)).rev() {
        let next = if occ > 0 {
            state.with_occupation(site, occ)
        } else {
            state
        };
        fill(
            next,
            site + 1,
            remaining - occ,
            cap,
            dipole + site as u64 * occ as u64,
            sites,
            class,
            out,
        );
    }
}

/// Filling fraction `p/q` with the maximal particle number `n_q = pL/q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FillingSpec {
    pub p: usize,
    pub q: usize,
    pub sites: usize,
}

impl FillingSpec {
    pub fn new(p: usize, q: usize, sites: usize) -> Result<Self> {
        if p == 0 || q < p || (q == p && p != 1) {
            return Err(Error::InvalidArguments(format!(
                "need 1 <= p < q or p = q = 1, got p={p}, q={q}"
            )));
        }
        if gcd(p, q) != 1 {
            return Err(Error::InvalidArguments(format!(
                "p={p} and q={q} are not coprime"
            )));
        }
        if (p * sites) % q != 0 {
            return Err(Error::InvalidArguments(format!(
                "filling {p}/{q} is not realizable on {sites} sites (pL/q not an integer)"
            )));
        }
        Ok(Self { p, q, sites })
    }

    /// Maximal filling `n_q = pL/q`.
    pub fn n_q(&self) -> usize {
        self.p * self.sites / self.q
    }

    /// `ell` with `L = ell * q^2`, when the ring size is commensurate.
    pub fn ell(&self) -> Option<usize> {
        let q2 = self.q * self.q;
        (self.sites % q2 == 0).then(|| self.sites / q2)
    }

    pub fn with_sites(&self, sites: usize) -> Result<Self> {
        Self::new(self.p, self.q, sites)
    }
}

pub(crate) fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
