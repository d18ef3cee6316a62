//! Human-readable rendering of analysis reports.

use penred_core::report::AnalysisReport;

pub fn render(report: &AnalysisReport) -> String {
    let mut out = String::new();
    if let Some(shape) = &report.shape {
        out.push_str(&format!(
            "pencil {} x {} ({})\n",
            shape.m, shape.n, shape.field
        ));
    }
    if let Some(digest) = &report.input_digest {
        out.push_str(&format!("digest  {digest}\n"));
    }
    if let Some(d) = &report.defects {
        out.push_str(&format!(
            "defects alpha = {:?}, beta_obs = {:?}, beta_ctrl = {:?} -> {}\n",
            d.alpha,
            d.beta_obs,
            d.beta_ctrl,
            if d.regular { "regular" } else { "singular" }
        ));
    }
    if let Some(n) = &report.normality {
        out.push_str(&format!(
            "normal  {} (sum gap {:.2e}, intersection gap {:.2e})\n",
            if n.normal { "yes" } else { "NO" },
            n.sum_gap,
            n.int_gap
        ));
    }
    if let Some(c) = &report.commutativity {
        out.push_str(&format!(
            "commute {} (residuals E {:.2e}, A {:.2e}; |J_U| = {:.6}, |J_W| = {:.6}; pivots {})\n",
            if c.equivalent {
                "equivalent"
            } else {
                "NOT equivalent"
            },
            c.intertwine_residual_e,
            c.intertwine_residual_a,
            c.norm_ju,
            c.norm_jw,
            if c.pivot_equivalences_hold {
                "consistent"
            } else {
                "INCONSISTENT"
            }
        ));
    }
    if let Some(samples) = &report.resolvent_samples {
        let members = samples.iter().filter(|s| s.member).count();
        out.push_str(&format!(
            "resolvent {members}/{} sampled points are members\n",
            samples.len()
        ));
    }
    if let Some(spectrum) = &report.core_spectrum {
        if spectrum.is_empty() {
            out.push_str("spectrum empty (resolvent set is the whole plane)\n");
        } else {
            let rendered: Vec<String> = spectrum
                .iter()
                .map(|(re, im)| {
                    if *im == 0.0 {
                        format!("{re:.6}")
                    } else {
                        format!("{re:.6}{im:+.6}i")
                    }
                })
                .collect();
            out.push_str(&format!("spectrum {{{}}}\n", rendered.join(", ")));
        }
    }
    if let Some(s) = &report.saddle {
        out.push_str(&format!(
            "inf-sup beta = {:.6e} ({}; pivot sigma_min obs {:.3e}, ctrl {:.3e})\n",
            s.beta,
            if s.satisfied { "satisfied" } else { "violated" },
            s.pivot_sigma_min_obs,
            s.pivot_sigma_min_ctrl
        ));
    }
    if let Some(ode) = &report.ode_extract {
        out.push_str(&format!(
            "ode     core dimension {}, eliminated layers {:?}\n",
            ode.ode_matrix.rows, ode.eliminated_dims
        ));
    }
    for w in &report.warnings {
        out.push_str(&format!("warning {w}\n"));
    }
    out
}

pub fn one_line(report: &AnalysisReport) -> String {
    let regular = report
        .defects
        .as_ref()
        .map(|d| if d.regular { "regular" } else { "singular" })
        .unwrap_or("?");
    let commute = report
        .commutativity
        .as_ref()
        .map(|c| {
            if c.equivalent {
                "commutes"
            } else {
                "COMMUTE-FAIL"
            }
        })
        .unwrap_or("?");
    format!("{regular}, {commute}")
}
