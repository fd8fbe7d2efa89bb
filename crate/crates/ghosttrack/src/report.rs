//! Metric reports: a human-readable table plus machine-readable key-value
//! lines, one metric per line.

use std::fmt::Write as _;

use ghosttrack_core::metrics::MetricReport;

/// Per-sequence reports plus their aggregate.
pub struct ReportSet {
    pub sequences: Vec<(String, MetricReport)>,
}

impl ReportSet {
    pub fn aggregate(&self) -> MetricReport {
        let mut agg = MetricReport::default();
        for (_, r) in &self.sequences {
            agg.add(r);
        }
        agg
    }

    /// Human-readable table.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<18} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9}",
            "sequence",
            "top5F1oc",
            "top5Proc",
            "top5Roc",
            "top5F1al",
            "top1F1oc",
            "top1F1al",
            "idf1oc",
            "idf1al",
            "motaOc",
            "motaAl"
        );
        let mut rows: Vec<(&str, &MetricReport)> =
            self.sequences.iter().map(|(n, r)| (n.as_str(), r)).collect();
        let agg = self.aggregate();
        if self.sequences.len() > 1 {
            rows.push(("AGGREGATE", &agg));
        }
        let fmt_mota = |m: Option<f64>| match m {
            Some(v) => format!("{v:9.4}"),
            None => format!("{:>9}", "n/a"),
        };
        for (name, r) in rows {
            let _ = writeln!(
                out,
                "{:<18} {:9.4} {:9.4} {:9.4} {:9.4} {:9.4} {:9.4} {:9.4} {:9.4} {} {}",
                name,
                r.topk_occl.f1(),
                r.topk_occl.precision(),
                r.topk_occl.recall(),
                r.topk_all.f1(),
                r.top1_occl.f1(),
                r.top1_all.f1(),
                r.idf1_occl.idf1(),
                r.idf1_all.idf1(),
                fmt_mota(r.mota_occl.mota()),
                fmt_mota(r.mota_all.mota()),
            );
        }
        out
    }

    /// Machine-readable lines: `<scope>.<metric> <value>`. Undefined MOTA
    /// values are omitted rather than written as zero.
    pub fn key_values(&self) -> String {
        let mut out = String::new();
        for (name, r) in &self.sequences {
            write_scope(&mut out, name, r);
        }
        write_scope(&mut out, "aggregate", &self.aggregate());
        out
    }
}

fn write_scope(out: &mut String, scope: &str, r: &MetricReport) {
    let mut kv = |key: &str, value: f64| {
        let _ = writeln!(out, "{scope}.{key} {value:.6}");
    };
    kv("topk_f1_occl", r.topk_occl.f1());
    kv("topk_prec_occl", r.topk_occl.precision());
    kv("topk_rec_occl", r.topk_occl.recall());
    kv("topk_f1_all", r.topk_all.f1());
    kv("top1_f1_occl", r.top1_occl.f1());
    kv("top1_f1_all", r.top1_all.f1());
    kv("idf1_occl", r.idf1_occl.idf1());
    kv("idf1_all", r.idf1_all.idf1());
    if let Some(m) = r.mota_occl.mota() {
        let _ = writeln!(out, "{scope}.mota_occl {m:.6}");
    }
    if let Some(m) = r.mota_all.mota() {
        let _ = writeln!(out, "{scope}.mota_all {m:.6}");
    }
    let mut kc = |key: &str, value: u64| {
        let _ = writeln!(out, "{scope}.{key} {value}");
    };
    kc("topk_tp_occl", r.topk_occl.tp);
    kc("topk_fp_occl", r.topk_occl.fp);
    kc("topk_fn_occl", r.topk_occl.misses);
    kc("topk_tp_all", r.topk_all.tp);
    kc("topk_fp_all", r.topk_all.fp);
    kc("topk_fn_all", r.topk_all.misses);
    kc("idtp_occl", r.idf1_occl.idtp);
    kc("idfp_occl", r.idf1_occl.idfp);
    kc("idfn_occl", r.idf1_occl.idfn);
    kc("idtp_all", r.idf1_all.idtp);
    kc("idfp_all", r.idf1_all.idfp);
    kc("idfn_all", r.idf1_all.idfn);
    kc("ids_occl", r.mota_occl.id_switches);
    kc("ids_all", r.mota_all.id_switches);
    kc("mota_fp_occl", r.mota_occl.fp);
    kc("mota_fn_occl", r.mota_occl.misses);
    kc("mota_gt_occl", r.mota_occl.gt_total);
    kc("mota_fp_all", r.mota_all.fp);
    kc("mota_fn_all", r.mota_all.misses);
    kc("mota_gt_all", r.mota_all.gt_total);
}
