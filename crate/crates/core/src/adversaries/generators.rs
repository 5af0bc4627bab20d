//! Oblivious lower-bound families. Each comes with a witness schedule that
//! realizes the small offline cost the construction promises.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algorithms::rng::derive_seed;
use crate::error::{Error, Result};
use crate::flow::flow_sum;
use crate::model::{Instance, InstanceMeta, Job, JobId, MachineIndex, Model, Schedule, Segment};
use crate::time::{isqrt, TimeQ};

pub const SINGLE_RAND_LB: &str = "single-rand-lb";
pub const MULTI_LB: &str = "multi-lb";
pub const MULTI_RESTART_LB: &str = "multi-restart-lb";

/// What a job is for within its gadget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GadgetRole {
    Large { batch: usize },
    /// Released at a fixed offset regardless of the coin.
    FixedSmall { batch: usize },
    /// Released at an offset chosen by the batch coin.
    RandomSmall { batch: usize },
}

#[derive(Debug, Clone)]
pub struct GeneratedFamily {
    /// Carries `meta` with family name, `n`, `m`, `k`, `ε` and coins.
    pub instance: Instance,
    pub witness: Schedule,
    pub witness_flow: TimeQ,
    /// Indexed by job id.
    pub roles: Vec<GadgetRole>,
}

impl GeneratedFamily {
    pub fn meta(&self) -> &InstanceMeta {
        self.instance.meta.as_ref().expect("generated instances carry metadata")
    }

    pub fn family(&self) -> &str {
        &self.meta().family
    }

    pub fn k(&self) -> usize {
        self.meta().k.expect("generated instances record k")
    }
}

fn coins_from_seed(seed: u64, tag: u64, count: usize) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[tag]));
    (0..count).map(|_| rng.gen_bool(0.5) as u8).collect()
}

/// Places each machine's jobs in the given order, each as early as its
/// release and the previous job allow.
pub(crate) fn left_shift(jobs: &[Job], orders: &[Vec<JobId>]) -> Schedule {
    let mut segments = Vec::new();
    for (i, order) in orders.iter().enumerate() {
        let mut free = TimeQ::zero();
        for &j in order {
            let job = &jobs[j];
            let start = job.release.clone().max(free);
            free = &start + &job.size;
            segments.push(Segment::completed(j, i as MachineIndex, start, free.clone()));
        }
    }
    Schedule::with_segments(Model::NonPreemptive, segments)
}

fn finish(
    m: usize,
    jobs: Vec<Job>,
    roles: Vec<GadgetRole>,
    orders: Vec<Vec<JobId>>,
    meta: InstanceMeta,
) -> Result<GeneratedFamily> {
    let witness = left_shift(&jobs, &orders);
    let instance = Instance::new(m, jobs, false)?.with_meta(meta);
    let witness_flow = flow_sum(&instance, &witness)?;
    Ok(GeneratedFamily { instance, witness, witness_flow, roles })
}

fn check_coins(coins: &[u8], k: usize) -> Result<()> {
    if coins.len() != k || coins.iter().any(|&c| c > 1) {
        return Err(Error::Config(format!("expected {k} coins in {{0, 1}}, got {coins:?}")));
    }
    Ok(())
}

/// `⌊√(n − 2)⌋`.
pub fn single_rand_lb_k(n: usize) -> usize {
    isqrt(n.saturating_sub(2) as u128) as usize
}

/// One job of size 2 at time 0, then `k` batches of `k` ε-jobs at
/// `1 + coin, 3, 4, …, k + 1`, with `ε = 1/(2n²)`.
pub fn single_rand_lb(n: usize, coin: u8) -> Result<GeneratedFamily> {
    if n < 3 {
        return Err(Error::Config(format!("single-rand-lb needs n ≥ 3, got {n}")));
    }
    check_coins(&[coin], 1)?;
    let k = single_rand_lb_k(n);
    let eps = TimeQ::new(1, 2 * (n as i64) * (n as i64));
    let mut jobs = vec![Job::new(0, TimeQ::zero(), TimeQ::from_int(2))];
    let mut roles = vec![GadgetRole::Large { batch: 0 }];
    let mut batch_starts = Vec::new();
    for b in 0..k {
        let t = if b == 0 { 1 + coin as i64 } else { 2 + b as i64 };
        batch_starts.push(TimeQ::from_int(t));
        for _ in 0..k {
            roles.push(if b == 0 { GadgetRole::RandomSmall { batch: 0 } } else { GadgetRole::FixedSmall { batch: 0 } });
            jobs.push(Job::new(jobs.len(), TimeQ::from_int(t), eps.clone()));
        }
    }
    // Coin 1: the long job fits in [0, 2) before any ε-job. Coin 0: clear
    // the first ε-batch, then run the long job.
    let first: Vec<JobId> = (1..=k).collect();
    let rest: Vec<JobId> = (k + 1..jobs.len()).collect();
    let order: Vec<JobId> = if coin == 1 {
        std::iter::once(0).chain(first).chain(rest).collect()
    } else {
        first.into_iter().chain(std::iter::once(0)).chain(rest).collect()
    };
    let meta = InstanceMeta {
        family: SINGLE_RAND_LB.into(),
        n: Some(n),
        m: Some(1),
        k: Some(k),
        eps: Some(eps),
        coins: vec![coin],
        batch_starts,
        ..Default::default()
    };
    finish(1, jobs, roles, vec![order], meta)
}

pub fn gen_single_rand_lb(n: usize, seed: u64) -> Result<GeneratedFamily> {
    let coin = coins_from_seed(seed, 1, 1)[0];
    let mut fam = single_rand_lb(n, coin)?;
    fam.instance.meta.as_mut().expect("meta").seed = Some(seed);
    Ok(fam)
}

/// Largest `k` with `k·m·(2k + 1) ≤ n`, i.e. `⌊√(n/(2m) + 1/16) − 1/4⌋`.
pub fn multi_lb_k(n: usize, m: usize) -> usize {
    let mut k = 0;
    while (k + 1) * m * (2 * k + 3) <= n {
        k += 1;
    }
    k
}

/// Largest `k` with `k·m·(2k + 2) ≤ n`, i.e. `⌊√(n/(2m) + 1/4) − 1/2⌋`.
pub fn multi_restart_lb_k(n: usize, m: usize) -> usize {
    let mut k = 0;
    while (k + 1) * m * (2 * k + 4) <= n {
        k += 1;
    }
    k
}

struct GadgetShape {
    family: &'static str,
    period: i64,
    larges: &'static [i64],
    fixed_at: i64,
    random_at: i64,
}

const MULTI: GadgetShape = GadgetShape { family: MULTI_LB, period: 5, larges: &[2], fixed_at: 4, random_at: 1 };
const RESTART: GadgetShape = GadgetShape { family: MULTI_RESTART_LB, period: 7, larges: &[2, 3], fixed_at: 6, random_at: 2 };

fn gadgets(shape: &GadgetShape, n: usize, m: usize, k: usize, coins: &[u8]) -> Result<GeneratedFamily> {
    if m == 0 {
        return Err(Error::Config("machine count must be positive".into()));
    }
    if k < 1 {
        return Err(Error::Config(format!("{}: n = {n} is too small for m = {m} (k < 1)", shape.family)));
    }
    check_coins(coins, k)?;
    let kq = k as i64;
    let small = TimeQ::new(1, kq);
    let mut jobs = Vec::new();
    let mut roles = Vec::new();
    let mut orders: Vec<Vec<JobId>> = vec![Vec::new(); m];
    let mut batch_starts = Vec::new();
    for (b, &c) in coins.iter().enumerate() {
        let t = shape.period * b as i64;
        batch_starts.push(TimeQ::from_int(t));
        for order in orders.iter_mut() {
            let mut push = |jobs: &mut Vec<Job>, r: TimeQ, p: TimeQ, role| {
                let id = jobs.len();
                jobs.push(Job::new(id, r, p));
                roles.push(role);
                id
            };
            let larges: Vec<JobId> = shape
                .larges
                .iter()
                .map(|&p| push(&mut jobs, TimeQ::from_int(t), TimeQ::from_int(p), GadgetRole::Large { batch: b }))
                .collect();
            let fixed: Vec<JobId> = (0..kq)
                .map(|i| {
                    let r = TimeQ::from_int(t + shape.fixed_at) + TimeQ::new(i, kq);
                    push(&mut jobs, r, small.clone(), GadgetRole::FixedSmall { batch: b })
                })
                .collect();
            let random: Vec<JobId> = (0..kq)
                .map(|i| {
                    let r = TimeQ::from_int(t + shape.random_at + c as i64) + TimeQ::new(i, kq);
                    push(&mut jobs, r, small.clone(), GadgetRole::RandomSmall { batch: b })
                })
                .collect();
            // Keep every large job clear of the small-job periods: with one
            // large job it goes first (c = 1) or right after the random
            // smalls (c = 0); with two, the one that fits before the random
            // smalls goes first and the other after them.
            match (larges.as_slice(), c) {
                ([l], 1) => order.extend([*l].iter().chain(&random).chain(&fixed)),
                ([l], _) => order.extend(random.iter().chain([l]).chain(&fixed)),
                ([l2, l3], 0) => order.extend([*l2].iter().chain(&random).chain([l3]).chain(&fixed)),
                ([l2, l3], _) => order.extend([*l3].iter().chain(&random).chain([l2]).chain(&fixed)),
                _ => unreachable!("gadgets have one or two large jobs"),
            }
        }
    }
    let meta = InstanceMeta {
        family: shape.family.into(),
        n: Some(n),
        m: Some(m),
        k: Some(k),
        coins: coins.to_vec(),
        batch_starts,
        ..Default::default()
    };
    finish(m, jobs, roles, orders, meta)
}

/// `k` batches of `m` gadgets at `t = 5b`; each gadget holds a size-2 job at
/// `t`, `k` fixed `1/k`-jobs from `t + 4` and `k` coin-placed `1/k`-jobs from
/// `t + 1 + c_b`.
pub fn multi_lb(n: usize, m: usize, coins: &[u8]) -> Result<GeneratedFamily> {
    gadgets(&MULTI, n, m, multi_lb_k(n, m), coins)
}

pub fn gen_multi_lb(n: usize, m: usize, seed: u64) -> Result<GeneratedFamily> {
    let k = multi_lb_k(n, m);
    let mut fam = multi_lb(n, m, &coins_from_seed(seed, 2, k))?;
    fam.instance.meta.as_mut().expect("meta").seed = Some(seed);
    Ok(fam)
}

/// Like [`multi_lb`] with period 7, two large jobs (sizes 2 and 3), fixed
/// smalls from `t + 6` and coin-placed smalls from `t + 2 + c_b`.
pub fn multi_restart_lb(n: usize, m: usize, coins: &[u8]) -> Result<GeneratedFamily> {
    gadgets(&RESTART, n, m, multi_restart_lb_k(n, m), coins)
}

pub fn gen_multi_restart_lb(n: usize, m: usize, seed: u64) -> Result<GeneratedFamily> {
    let k = multi_restart_lb_k(n, m);
    let mut fam = multi_restart_lb(n, m, &coins_from_seed(seed, 3, k))?;
    fam.instance.meta.as_mut().expect("meta").seed = Some(seed);
    Ok(fam)
}

/// Generates a family by name.
pub fn generate(family: &str, n: usize, m: usize, seed: u64) -> Result<GeneratedFamily> {
    match family {
        SINGLE_RAND_LB => {
            if m != 1 {
                return Err(Error::Config(format!("{SINGLE_RAND_LB} is a single-machine family")));
            }
            gen_single_rand_lb(n, seed)
        }
        MULTI_LB => gen_multi_lb(n, m, seed),
        MULTI_RESTART_LB => gen_multi_restart_lb(n, m, seed),
        other => Err(Error::Config(format!("unknown family {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::validate::validate_schedule;
    use proptest::prelude::*;

    fn q(n: i64) -> TimeQ {
        TimeQ::from_int(n)
    }

    #[test]
    fn single_rand_lb_counts_and_eps() {
        let f = single_rand_lb(102, 0).unwrap();
        assert_eq!(f.k(), 10);
        assert_eq!(f.instance.n(), 101);
        assert_eq!(f.meta().eps, Some(TimeQ::new(1, 20808)));
        assert_eq!(f.instance.job(1).release, q(1));
        assert_eq!(single_rand_lb(102, 1).unwrap().instance.job(1).release, q(2));
        assert_eq!(f.instance.job(f.instance.n() - 1).release, q(11));
        assert!(single_rand_lb(2, 0).is_err());
    }

    #[test]
    fn single_rand_lb_witness_is_constant() {
        for n in [3usize, 10, 102, 402, 1602] {
            for coin in [0, 1] {
                let f = single_rand_lb(n, coin).unwrap();
                assert!(validate_schedule(&f.instance, &f.witness).unwrap().is_ok());
                let k = f.k() as i64;
                let eps = f.meta().eps.clone().unwrap();
                let bound = q(4) + TimeQ::from_int(2 * k * k) * eps;
                assert!(f.witness_flow <= bound, "n={n} coin={coin}: {}", f.witness_flow);
            }
        }
    }

    #[test]
    fn multi_lb_counts() {
        assert_eq!(multi_lb_k(58, 1), 5);
        let f = gen_multi_lb(58, 1, 7).unwrap();
        assert_eq!(f.instance.n(), 55);
        // Closed form against the real-valued formula.
        for (n, m) in [(58usize, 1usize), (230, 2), (926, 4), (10, 1), (1000, 3)] {
            let real = ((n as f64 / (2.0 * m as f64) + 1.0 / 16.0).sqrt() - 0.25).floor() as usize;
            assert_eq!(multi_lb_k(n, m), real);
            let real = ((n as f64 / (2.0 * m as f64) + 0.25).sqrt() - 0.5).floor() as usize;
            assert_eq!(multi_restart_lb_k(n, m), real);
        }
    }

    #[test]
    fn multi_restart_lb_counts() {
        assert_eq!(multi_restart_lb_k(60, 1), 5);
        let f = gen_multi_restart_lb(60, 1, 3).unwrap();
        assert_eq!(f.instance.n(), 60);
    }

    #[test]
    fn forced_coins_place_random_smalls() {
        let f = multi_lb(58, 1, &[0; 5]).unwrap();
        for (id, role) in f.roles.iter().enumerate() {
            if let GadgetRole::RandomSmall { batch } = role {
                let t = q(5 * *batch as i64 + 1);
                let r = &f.instance.job(id).release;
                assert!(*r >= t && *r < &t + &q(1));
            }
        }
        let f = multi_restart_lb(60, 1, &[1; 5]).unwrap();
        for (id, role) in f.roles.iter().enumerate() {
            if let GadgetRole::RandomSmall { batch } = role {
                let t = q(7 * *batch as i64 + 3);
                let r = &f.instance.job(id).release;
                assert!(*r >= t && *r < &t + &q(1));
            }
        }
    }

    #[test]
    fn witness_cost_per_gadget() {
        // One gadget: flow 6 (coin 0: large waits 2) or 4; restart: 10 or 11.
        assert_eq!(multi_lb(3, 1, &[0]).unwrap().witness_flow, q(6));
        assert_eq!(multi_lb(3, 1, &[1]).unwrap().witness_flow, q(4));
        assert_eq!(multi_restart_lb(4, 1, &[0]).unwrap().witness_flow, q(10));
        assert_eq!(multi_restart_lb(4, 1, &[1]).unwrap().witness_flow, q(11));
    }

    #[test]
    fn too_small_is_refused() {
        assert!(gen_multi_lb(2, 1, 0).is_err());
        assert!(gen_multi_restart_lb(3, 1, 0).is_err());
        assert!(multi_lb(58, 1, &[0; 4]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn witnesses_validate_within_bounds(n in 3usize..400, m in 1usize..5, seed in any::<u64>()) {
            if let Ok(f) = gen_multi_lb(n, m, seed) {
                let k = f.k();
                prop_assert_eq!(f.instance.n(), k * m * (2 * k + 1));
                prop_assert!(f.instance.n() <= n);
                prop_assert!(validate_schedule(&f.instance, &f.witness).unwrap().is_ok());
                prop_assert!(f.witness_flow <= TimeQ::from_int((6 * m * k) as i64));
            }
            if let Ok(f) = gen_multi_restart_lb(n, m, seed) {
                let k = f.k();
                prop_assert_eq!(f.instance.n(), k * m * (2 * k + 2));
                prop_assert!(f.instance.n() <= n);
                prop_assert!(validate_schedule(&f.instance, &f.witness).unwrap().is_ok());
                prop_assert!(f.witness_flow <= TimeQ::from_int((11 * m * k) as i64));
            }
            let f = gen_single_rand_lb(n, seed).unwrap();
            let k = f.k();
            prop_assert_eq!(f.instance.n(), 1 + k * k);
            prop_assert!(f.instance.n() <= n);
        }
    }
}
