//! gnuplot scripts written next to the CSV outputs.

use std::fmt::Write;

/// Voltage and frequency at `bus` plus the local device powers.
pub fn transient_script(csv: &str, bus: u32, png: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set terminal pngcairo size 1000,900");
    let _ = writeln!(s, "set output '{png}'");
    let _ = writeln!(s, "set key autotitle columnhead");
    let _ = writeln!(s, "set multiplot layout 3,1");
    let _ = writeln!(s, "set xlabel 't [s]'");
    let _ = writeln!(s, "set ylabel 'V [pu]'\nplot '{csv}' using 1:'bus_{bus}_vmag_pu' with lines");
    let _ = writeln!(s, "set ylabel 'df [Hz]'\nplot '{csv}' using 1:'bus_{bus}_fdev_hz' with lines");
    let _ = writeln!(
        s,
        "set ylabel 'P [MW]'\nplot '{csv}' using 1:'smr_pmech_mw' with lines, '' using 1:'bess_p_mw' with lines"
    );
    let _ = writeln!(s, "unset multiplot");
    s
}

/// Overlay of both configurations for each scenario.
pub fn compare_script(pairs: &[(String, String, String)], bus: u32) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set terminal pngcairo size 1000,700");
    let _ = writeln!(s, "set xlabel 't [s]'");
    for (id, grid, ies) in pairs {
        let _ = writeln!(s, "set output '{id}.png'");
        let _ = writeln!(s, "set multiplot layout 2,1 title '{}'", id.replace('_', "-"));
        let _ = writeln!(
            s,
            "set ylabel 'V [pu]'\nplot '{grid}' using 1:'bus_{bus}_vmag_pu' with lines title 'grid only', \
             '{ies}' using 1:'bus_{bus}_vmag_pu' with lines title 'with IES'"
        );
        let _ = writeln!(
            s,
            "set ylabel 'df [Hz]'\nplot '{grid}' using 1:'bus_{bus}_fdev_hz' with lines title 'grid only', \
             '{ies}' using 1:'bus_{bus}_fdev_hz' with lines title 'with IES'"
        );
        let _ = writeln!(s, "unset multiplot");
    }
    s
}
