//! CSV tables. Every number is written with six decimals and a '.' radix.

use std::fmt::Write;

use panolayout_core::loss::LossComponents;
use panolayout_core::metrics::MetricsReport;
use panolayout_core::scene::NoiseSpec;

pub fn fmt6(x: f64) -> String {
    format!("{x:.6}")
}

const PAIR_COLUMNS: &str = "scene_id,rot_err_deg,trans_ang_err_deg,iou2d,iou3d,delta1,success";
const LOSS_COLUMNS: &str = "loss_layout,loss_corr,loss_covis,loss_cycle_corr,loss_cycle_covis,loss_total";

fn push_losses(line: &mut String, l: &LossComponents, total: f64) {
    for x in l.as_array().into_iter().chain([total]) {
        line.push(',');
        line.push_str(&fmt6(x));
    }
}

/// One row per pair, then a `mean` row and `#`-prefixed aggregate lines.
///
/// `losses` holds per-pair components and weighted totals, aligned with the
/// report's pairs. In the `mean` row the `success` column is the success rate.
pub fn eval_csv(report: &MetricsReport, losses: Option<&[(LossComponents, f64)]>) -> String {
    let mut out = String::from(PAIR_COLUMNS);
    if losses.is_some() {
        out.push(',');
        out.push_str(LOSS_COLUMNS);
    }
    out.push('\n');
    for (i, p) in report.pairs.iter().enumerate() {
        let mut line = format!(
            "{},{},{},{},{},{},{}",
            p.scene_id,
            fmt6(p.errors.rot_err),
            fmt6(p.errors.trans_ang_err),
            fmt6(p.iou2d),
            fmt6(p.iou3d),
            fmt6(p.delta1),
            u8::from(p.success())
        );
        if let Some(l) = losses {
            push_losses(&mut line, &l[i].0, l[i].1);
        }
        out.push_str(&line);
        out.push('\n');
    }
    let mut line = format!(
        "mean,{},{},{},{},{},{}",
        fmt6(report.mean_rot_err),
        fmt6(report.mean_trans_err),
        fmt6(report.iou2d),
        fmt6(report.iou3d),
        fmt6(report.delta1),
        fmt6(report.success_rate)
    );
    if let Some(l) = losses {
        let n = l.len() as f64;
        let mut mean = [0.0; 6];
        for (c, t) in l {
            for (m, x) in mean.iter_mut().zip(c.as_array().into_iter().chain([*t])) {
                *m += x / n;
            }
        }
        let comps = LossComponents {
            layout: mean[0],
            correspondence: mean[1],
            covisibility: mean[2],
            cycle_correspondence: mean[3],
            cycle_covisibility: mean[4],
        };
        push_losses(&mut line, &comps, mean[5]);
    }
    out.push_str(&line);
    out.push('\n');
    for (k, v) in [
        ("r_maa5", report.r_maa5),
        ("r_maa10", report.r_maa10),
        ("t_maa5", report.t_maa5),
        ("t_maa10", report.t_maa10),
    ] {
        let _ = writeln!(out, "# {k},{}", fmt6(v));
    }
    for (k, v) in [("mean_rot_err_success", report.mean_rot_err_success), ("mean_trans_err_success", report.mean_trans_err_success)] {
        let _ = writeln!(out, "# {k},{}", v.map_or_else(|| "none".to_string(), fmt6));
    }
    out
}

pub const SWEEP_HEADER: &str = "cell,sigma_v,sigma_o,outlier_frac,flip_p,scenes,success_rate,mean_rot_err_deg,mean_trans_err_deg,r_maa5,r_maa10,t_maa5,t_maa10,iou2d,iou3d,delta1\n";

pub fn sweep_row(cell: usize, noise: &NoiseSpec, r: &MetricsReport) -> String {
    let cols = [
        noise.sigma_v,
        noise.sigma_o,
        noise.outlier_frac,
        noise.flip_p,
    ]
    .into_iter()
    .map(fmt6)
    .chain([r.pairs.len().to_string()])
    .chain(
        [
            r.success_rate,
            r.mean_rot_err,
            r.mean_trans_err,
            r.r_maa5,
            r.r_maa10,
            r.t_maa5,
            r.t_maa10,
            r.iou2d,
            r.iou3d,
            r.delta1,
        ]
        .into_iter()
        .map(fmt6),
    )
    .collect::<Vec<_>>()
    .join(",");
    format!("{cell},{cols}\n")
}
