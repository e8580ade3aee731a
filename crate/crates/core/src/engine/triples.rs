//! Multiplication triples: optimistic generation, cut-and-choose, bucketing and
//! the sacrifice check.

use super::mal::rand_shared;
use super::prims::{fresh_masks, rec_recv, rec_send, RecPoints};
use super::semi::{finish_products_semi, prep_products_semi, start_products_semi, ProductPrep};
use super::{Party, ProtocolError, Result};
use crate::crypto::{hash_elements, KeyId};
use crate::party::PartyId;
use crate::ring::{RingElement, Width};
use crate::sharing::MaskedShare;
use crate::transport::Point;

/// A shared triple, expected to satisfy `c = a * b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Triple {
    pub a: MaskedShare,
    pub b: MaskedShare,
    pub c: MaskedShare,
}

/// A triple to check and the triple sacrificed to check it.
#[derive(Clone, Copy, Debug)]
pub struct PrcPair {
    pub check: Triple,
    pub sacrifice: Triple,
}

/// How checked triples are matched with the triples that verify them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum BucketMode {
    /// Consumers are matched to buckets through a second shuffle after all
    /// products are fixed.
    #[default]
    Postponed,
    /// Consumer `k` uses bucket `k`.
    PerBucket,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TripleParams {
    /// Statistical security parameter in bits.
    pub security: u32,
    /// Forces the bucket size.
    pub bucket: Option<usize>,
    /// Forces the number of opened triples; the default is three buckets' worth.
    pub opened: Option<usize>,
    pub mode: BucketMode,
}

impl Default for TripleParams {
    fn default() -> Self {
        TripleParams {
            security: 40,
            bucket: None,
            opened: None,
            mode: BucketMode::Postponed,
        }
    }
}

/// Triple counts for one batch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TriplePlan {
    pub needed: usize,
    pub bucket: usize,
    pub opened: usize,
}

impl TriplePlan {
    /// Optimistic triples to generate.
    pub fn total(&self) -> usize {
        self.bucket * self.needed + self.opened
    }
}

impl TripleParams {
    pub fn with_bucket(mut self, b: usize) -> Self {
        self.bucket = Some(b);
        self
    }

    pub fn plan(&self, needed: usize) -> TriplePlan {
        let bucket = self.bucket.unwrap_or_else(|| bucket_size(needed, self.security)).max(1);
        TriplePlan {
            needed,
            bucket,
            opened: self.opened.unwrap_or(3 * bucket),
        }
    }
}

/// `ceil(s / log2 n)`, at least 2.
pub fn bucket_size(n: usize, security: u32) -> usize {
    let log = (n.max(2) as f64).log2();
    ((security as f64 / log).ceil() as usize).max(2)
}

/// Optimistic triples in flight between rounds.
pub(crate) struct Optimistic {
    d: Vec<MaskedShare>,
    e: Vec<MaskedShare>,
    preps: Vec<ProductPrep>,
    own: Vec<RingElement>,
}

/// Samples `d, e` and the product masks; `P0` sends its mask-product shares.
pub(crate) fn optimistic_prep(p: &mut Party, width: Width, n: usize) -> Result<Optimistic> {
    let tag = p.tag("trip");
    let d = rand_shared(p, &tag, "d", width, n)?;
    let e = rand_shared(p, &tag, "e", width, n)?;
    let groups: Vec<Vec<_>> = d.iter().zip(&e).map(|(x, y)| vec![(*x, *y)]).collect();
    let outs = fresh_masks(p, &tag, width, n)?;
    let preps = prep_products_semi(p, &groups, outs, Point::TripGamma)?;
    Ok(Optimistic {
        d,
        e,
        preps,
        own: Vec::new(),
    })
}

/// Evaluators send their shares of the masked products.
pub(crate) fn optimistic_start(p: &mut Party, opt: &mut Optimistic) -> Result<()> {
    let groups: Vec<Vec<_>> = opt.d.iter().zip(&opt.e).map(|(x, y)| vec![(*x, *y)]).collect();
    opt.own = start_products_semi(p, &groups, &opt.preps, Point::TripMz)?;
    Ok(())
}

pub(crate) fn optimistic_finish(p: &mut Party, opt: Optimistic) -> Result<Vec<Triple>> {
    let f = finish_products_semi(p, &opt.preps, &opt.own, Point::TripMz)?;
    Ok(opt
        .d
        .into_iter()
        .zip(opt.e)
        .zip(f)
        .map(|((a, b), c)| Triple { a, b, c })
        .collect())
}

/// A permutation of `0..n` from the all-party key, by Fisher-Yates.
fn shared_shuffle(p: &mut Party, tag: &str, stream: &str, n: usize) -> Result<Vec<usize>> {
    let r = p.keys.sample_u64(KeyId::KP, &format!("{tag}/{stream}"), n)?;
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = (r[i] % (i as u64 + 1)) as usize;
        perm.swap(i, j);
    }
    Ok(perm)
}

fn flatten(ts: &[Triple]) -> Vec<MaskedShare> {
    ts.iter().flat_map(|t| [t.a, t.b, t.c]).collect()
}

const OPEN: RecPoints = RecPoints {
    share: Point::TripOpen,
    digest: Point::TripOpenDigest,
};

const PRC: RecPoints = RecPoints {
    share: Point::PrcShare,
    digest: Point::PrcDigest,
};

/// Opened values of one round of sacrifice checks.
pub(crate) struct PrcRound {
    pairs: Vec<PrcPair>,
    shares: Vec<MaskedShare>,
}

/// Sends the shares that open `a - d` and `b - e` for every pair.
pub(crate) fn prc_start(p: &mut Party, pairs: Vec<PrcPair>) -> Result<PrcRound> {
    let rho = pairs.iter().map(|x| x.check.a - x.sacrifice.a);
    let sigma = pairs.iter().map(|x| x.check.b - x.sacrifice.b);
    let shares: Vec<MaskedShare> = rho.chain(sigma).collect();
    rec_send(p, &shares, &PartyId::ALL, PRC, true)?;
    Ok(PrcRound { pairs, shares })
}

/// Receives the openings, then checks `tau = c - f - sigma d - rho e - sigma rho`
/// is zero through pairwise digests.
pub(crate) fn prc_finish(p: &mut Party, round: PrcRound) -> Result<()> {
    let me = p.id();
    let n = round.pairs.len();
    if n == 0 {
        return Ok(());
    }
    let opened = rec_recv(p, &round.shares, &PartyId::ALL, PRC, true)?.expect("every party is a target");
    let (rho, sigma) = opened.split_at(n);
    let tau: Vec<MaskedShare> = round
        .pairs
        .iter()
        .zip(rho.iter().zip(sigma))
        .map(|(x, (&r, &s))| {
            let (t, f) = (x.check, x.sacrifice);
            (t.c - f.c - f.a.scale(s) - f.b.scale(r)).add_const(RingElement::zero(r.width()) - s * r)
        })
        .collect();
    if let Some(b) = p.backdoor() {
        b.record("prc.tau", me, &tau);
    }
    tau_check(p, &tau)
}

/// Every pair of parties compares two expressions that agree iff `tau = 0`:
/// `P0-P1` on `lambda2`, `P0-P2` on `lambda1`, `P1-P2` on `lambda1`.
fn tau_check(p: &mut Party, tau: &[MaskedShare]) -> Result<()> {
    use PartyId::*;
    let me = p.id();
    let width = tau[0].width();
    let h = |v: Vec<RingElement>| hash_elements(width, &v);
    let (first, second): (Vec<_>, Vec<_>) = tau.iter().map(|t| t.parts()).unzip();
    let diff: Vec<RingElement> = first.iter().zip(&second).map(|(m, l)| *m - *l).collect();
    // each pair sends one digest each way and expects its own value back
    let plan = match me {
        P0 => [(P1, h(second)), (P2, h(first))],
        P1 => [(P0, h(diff)), (P2, h(second))],
        P2 => [(P0, h(diff.clone())), (P1, h(diff))],
    };
    for (peer, d) in &plan {
        p.net.send_digest(*peer, Point::PrcTau, *d)?;
    }
    for (peer, d) in plan {
        if p.net.recv_digest(peer, Point::PrcTau)? != d {
            return Err(ProtocolError::abort(format!("prc.tau: check with {peer} failed")));
        }
    }
    Ok(())
}

/// Standalone sacrifice check of `pairs`.
pub fn prc_check(p: &mut Party, pairs: &[PrcPair]) -> Result<()> {
    let round = prc_start(p, pairs.to_vec())?;
    prc_finish(p, round)
}

/// Opens the first `opened` triples after the shuffle and checks them.
fn open_send(p: &mut Party, opened: &[Triple]) -> Result<Vec<MaskedShare>> {
    let shares = flatten(opened);
    rec_send(p, &shares, &PartyId::ALL, OPEN, true)?;
    Ok(shares)
}

fn open_finish(p: &mut Party, shares: &[MaskedShare]) -> Result<()> {
    let vals = rec_recv(p, shares, &PartyId::ALL, OPEN, true)?.expect("every party is a target");
    if vals.chunks(3).any(|t| t[0] * t[1] != t[2]) {
        return Err(ProtocolError::abort("trip.open: an opened triple is not a product"));
    }
    Ok(())
}

/// Shuffles the optimistic triples, opens `plan.opened` of them, buckets the rest
/// and runs every sacrifice check. Each of `consumers` is checked against the
/// first triple of a bucket; without consumers the bucket heads are returned.
pub(crate) fn cut_and_bucket(
    p: &mut Party,
    triples: Vec<Triple>,
    plan: &TriplePlan,
    consumers: &[Triple],
    mode: BucketMode,
) -> Result<Vec<Triple>> {
    assert_eq!(triples.len(), plan.total(), "triple count does not match the plan");
    let tag = p.tag("bucket");
    let perm = shared_shuffle(p, &tag, "pi", triples.len())?;
    let shuffled: Vec<Triple> = perm.iter().map(|&i| triples[i]).collect();
    let (opened, rest) = shuffled.split_at(plan.opened);
    let b = plan.bucket;
    let heads: Vec<Triple> = (0..plan.needed).map(|k| rest[k * b]).collect();
    let mut pairs = Vec::with_capacity(plan.needed * b);
    for k in 0..plan.needed {
        for j in 1..b {
            pairs.push(PrcPair {
                check: rest[k * b],
                sacrifice: rest[k * b + j],
            });
        }
    }
    if !consumers.is_empty() {
        assert_eq!(consumers.len(), plan.needed, "one consumer per bucket");
        let order = match mode {
            BucketMode::Postponed => shared_shuffle(p, &tag, "sigma", plan.needed)?,
            BucketMode::PerBucket => (0..plan.needed).collect(),
        };
        for (c, &k) in consumers.iter().zip(&order) {
            pairs.push(PrcPair {
                check: *c,
                sacrifice: heads[k],
            });
        }
    }
    let open_shares = open_send(p, opened)?;
    let round = prc_start(p, pairs)?;
    open_finish(p, &open_shares)?;
    prc_finish(p, round)?;
    Ok(heads)
}

/// `needed` verified random triples.
pub fn gen_triples(p: &mut Party, needed: usize, width: Width, params: &TripleParams) -> Result<Vec<Triple>> {
    let plan = params.plan(needed);
    let mut opt = optimistic_prep(p, width, plan.total())?;
    optimistic_start(p, &mut opt)?;
    let triples = optimistic_finish(p, opt)?;
    cut_and_bucket(p, triples, &plan, &[], params.mode)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bucket_sizes() {
        assert_eq!(bucket_size(1 << 20, 40), 2);
        assert_eq!(bucket_size(1 << 10, 40), 4);
        assert_eq!(bucket_size(16, 40), 10);
        assert_eq!(bucket_size(1, 40), 40);
        let plan = TripleParams::default().with_bucket(2).plan(16);
        assert_eq!((plan.opened, plan.total()), (6, 38));
    }
}
