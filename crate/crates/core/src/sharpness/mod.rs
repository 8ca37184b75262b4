//! Blow-up ratios of the certified lower bounds against the gauges
//! `x · ln(1 + x)^p`.

mod enclosure;
mod table;

pub use enclosure::{ln1p, ln_dyadic, to_scientific, Enclosure, WORK_BITS};
pub use table::{
    finite_s_report, phi_eval, rows_from_certificates, rows_to_csv, sharpness_table, trend_report, FiniteSReport,
    Growth, PhiSpec, PhiTrend, RatioRow, TrendReport, CSV_HEADER, TREND_NOTE,
};
