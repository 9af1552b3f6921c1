use std::io::Write;

use auctionlab_core::game::{best_response, critical_alpha, nash_report, NashReport, PhaseReport, TwoStageProcess};
use auctionlab_core::mech::{compare_all, MechanismComparison};
use auctionlab_core::seller::{erm_theorem5_experiment, summarize, ErmExperiment, ErmReport, ErmSummary};
use auctionlab_core::{Competition, Distribution};
use rayon::prelude::*;

use crate::config::{BestResponseConfig, ErmConfig, MechanismsConfig, NashConfig, PhaseConfig};
use crate::output::{csv_writer, num};
use crate::LabError;

pub const BEST_RESPONSE_HEADER: [&str; 9] = ["reserve", "alpha", "x0_star", "x1_star", "u1", "u2", "u_total", "m1", "m2"];
pub const ERM_HEADER: [&str; 10] = ["n", "trial", "eps", "delta", "delta1", "x_hat", "x_max", "c_n", "bound", "hit"];
pub const MECHANISMS_HEADER: [&str; 5] = ["mechanism", "u_truthful", "u_threshold", "uplift_abs", "uplift_rel"];

fn competition_or_default(c: &Option<Competition>, law: &Distribution) -> Competition {
    c.clone().unwrap_or_else(|| Competition::law(law.clone()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestResponseRow {
    /// Whether phase 1 runs with the random reserve.
    pub random_reserve: bool,
    pub alpha: f64,
    pub x0_star: f64,
    pub x1_star: f64,
    pub u1: f64,
    pub u2: f64,
    pub u_total: f64,
    pub m1: f64,
    pub m2: f64,
}

/// Best response on an evenly spaced α grid, first without a phase-1
/// reserve, then with reserves drawn from `reserve_law`.
pub fn best_response_sweep(c: &BestResponseConfig) -> Result<Vec<BestResponseRow>, LabError> {
    if c.alpha_points < 2 {
        return Err(LabError::Config("alpha_points must be at least 2".into()));
    }
    let g = competition_or_default(&c.competition, &c.value_law);
    let mut jobs = Vec::new();
    for h in [None, Some(c.reserve_law.clone())] {
        for i in 0..c.alpha_points {
            jobs.push((h.clone(), i as f64 / (c.alpha_points - 1) as f64));
        }
    }
    jobs.into_par_iter()
        .map(|(h, alpha)| {
            let random_reserve = h.is_some();
            let p = TwoStageProcess::new(g.clone(), h, c.value_law.clone(), alpha)?;
            let br = best_response(&p, c.grid)?;
            let u = br.utility;
            Ok(BestResponseRow {
                random_reserve,
                alpha,
                x0_star: br.x0,
                x1_star: br.x1,
                u1: u.u1,
                u2: u.u2,
                u_total: u.u_total,
                m1: u.m1,
                m2: u.m2,
            })
        })
        .collect()
}

pub fn write_best_response<W: Write>(rows: &[BestResponseRow], w: W) -> Result<(), LabError> {
    let mut out = csv_writer(w);
    out.write_record(BEST_RESPONSE_HEADER)?;
    for r in rows {
        let h = if r.random_reserve { "uniform" } else { "none" };
        let mut rec = vec![h.to_string()];
        rec.extend([r.alpha, r.x0_star, r.x1_star, r.u1, r.u2, r.u_total, r.m1, r.m2].map(num));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

pub fn nash(c: &NashConfig) -> Result<Vec<NashReport>, LabError> {
    if c.k.is_empty() {
        return Err(LabError::Config("k must list at least one bidder count".into()));
    }
    c.k.iter().map(|&k| Ok(nash_report(k, &c.value_law)?)).collect()
}

pub fn phase(c: &PhaseConfig) -> Result<PhaseReport, LabError> {
    let g = competition_or_default(&c.competition, &c.value_law);
    Ok(critical_alpha(&g, &c.value_law)?)
}

pub fn erm(c: &ErmConfig, seed: u64) -> Result<(Vec<ErmReport>, Vec<ErmSummary>), LabError> {
    let e = ErmExperiment {
        dist: c.value_law.clone(),
        r: c.r,
        schedule: c.schedule,
        n_grid: c.n_grid.clone(),
        delta: c.delta,
        trials: c.trials,
        seed,
    };
    let rows = erm_theorem5_experiment(&e)?;
    let sums = summarize(&rows);
    Ok((rows, sums))
}

/// Per-trial rows, then one `#` summary line per sample size.
pub fn write_erm<W: Write>(rows: &[ErmReport], sums: &[ErmSummary], mut w: W) -> Result<(), LabError> {
    {
        let mut out = csv_writer(&mut w);
        out.write_record(ERM_HEADER)?;
        for r in rows {
            let mut rec = vec![r.n.to_string(), r.trial.to_string()];
            rec.extend([r.eps, r.delta, r.delta1, r.x_hat, r.x_max, r.c_n, r.bound].map(num));
            rec.push(r.hit.to_string());
            out.write_record(&rec)?;
        }
        out.flush()?;
    }
    for s in sums {
        writeln!(
            w,
            "# n={} hit_rate={} delta1={} median_x_hat={} ok={}",
            s.n,
            num(s.hit_rate),
            num(s.delta1),
            num(s.median_x_hat),
            s.ok
        )?;
    }
    Ok(())
}

pub fn mechanisms(c: &MechanismsConfig) -> Result<Vec<MechanismComparison>, LabError> {
    Ok(compare_all(c.k, &c.value_law, c.thresholding)?)
}

pub fn write_mechanisms<W: Write>(rows: &[MechanismComparison], w: W) -> Result<(), LabError> {
    let mut out = csv_writer(w);
    out.write_record(MECHANISMS_HEADER)?;
    for r in rows {
        let mut rec = vec![r.mechanism.name().to_string()];
        rec.extend([r.u_truthful, r.u_threshold, r.uplift_abs, r.uplift_rel].map(num));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}
