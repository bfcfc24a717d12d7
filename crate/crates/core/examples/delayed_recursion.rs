//! The scalar delayed recursion `a^(t) = b + Γ a^(t-δ^(t))` never exceeds
//! `b / (1 - Γ)`, whatever the delay schedule.

use fptrack::bounds::check_delayed_recursion_limsup;

fn main() -> fptrack::Result<()> {
    for (b, gamma, t, schedule) in [
        (1.0, 0.5, 1, vec![1]),
        (0.2, 0.9, 3, vec![3, 1, 2]),
        (2.0, 0.3, 5, vec![5, 5, 1, 4]),
    ] {
        let check = check_delayed_recursion_limsup(b, gamma, t, &schedule, 10_000)?;
        println!(
            "b {b}, Γ {gamma}, delays {schedule:?}: limsup {:.9} <= {:.9} ({})",
            check.empirical_limsup,
            check.bound,
            if check.pass { "ok" } else { "violated" }
        );
    }
    Ok(())
}
