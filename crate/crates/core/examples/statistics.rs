//! The inferential toolkit on the headline counts.

use cemis::stats::{binom_test, chi2_gof, metrics, wald_ci_from_rate, ConfusionCounts, Sidedness};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (p, n) in [(0.65, 250), (0.466, 500), (0.664, 500)] {
        let ci = wald_ci_from_rate(p, n, 0.95)?;
        println!("Wald 95% CI for {p} of {n}: [{:.4}, {:.4}]", ci.lower, ci.upper);
    }
    let lower = binom_test(233, 500, 0.5, Sidedness::OneSidedLower)?;
    println!("233/500 against 0.5, lower tail: p = {:.6}", lower.p_value);
    let two = binom_test(332, 500, 0.5, Sidedness::TwoSided)?;
    println!("332/500 against 0.5, two-sided: p = {:.4e}", two.p_value);

    let observed = [178.0, 72.0, 216.0, 34.0];
    let expected = [125.0, 125.0, 125.0, 125.0];
    let gof = chi2_gof(&observed, &expected)?;
    println!("chi-square {:.3} on {:?} df: p = {:.3e}", gof.statistic, gof.df, gof.p_value);

    let m = metrics(&ConfusionCounts::new(178, 34, 216, 72))?;
    println!("accuracy {:.4}, sensitivity {:?}, specificity {:?}", m.accuracy, m.sensitivity, m.specificity);
    Ok(())
}
