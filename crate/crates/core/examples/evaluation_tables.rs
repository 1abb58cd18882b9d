//! Classification reports recomputed from published confusion matrices.
//!
//! cargo run --example evaluation_tables

use polarity::corpus::Label;
use polarity::eval::{report_from_confusion, ConfusionMatrix, Evaluation};

fn main() -> polarity::error::Result<()> {
    let matrices = [
        (
            "subtask 1, ES",
            [[114, 36, 5, 13], [28, 215, 8, 15], [29, 43, 4, 7], [17, 23, 2, 22]],
        ),
        (
            "subtask 2, ES",
            [[122, 42, 1, 3], [27, 233, 1, 5], [29, 49, 2, 3], [20, 27, 0, 17]],
        ),
    ];
    for (name, rows) in matrices {
        let confusion = ConfusionMatrix::from_rows(rows);
        let report = report_from_confusion(&confusion)?;
        let mean_f1 = Label::ALL.iter().map(|&l| report.class(l).f1).sum::<f64>() / 4.0;
        println!("{name}\n{}", Evaluation { report, confusion });
        println!("mean of per-class F1 (not the reported macro-F1): {mean_f1:.2}\n");
    }
    Ok(())
}
