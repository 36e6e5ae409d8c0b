//! Gnuplot scripts written next to the data files they read.

use std::fmt::Write;

const HEADER: &str = "set datafile separator ','\nset key outside right\n";

fn states(out: &mut String, states: &[(&str, (f64, f64))]) {
    for (n, (name, (k, s))) in states.iter().enumerate() {
        let _ = writeln!(out, "set label {} '{name}' at {k},{s} point pt 3 ps 2 offset 0.5,0.5", n + 1);
    }
}

/// Trajectories in the phase plane and `k(t)`, one curve per data file.
pub fn trajectories(title: &str, files: &[(String, String)], marks: &[(&str, (f64, f64))], k_u: f64) -> String {
    let mut s = String::from(HEADER);
    let _ = writeln!(s, "set terminal pngcairo size 1400,600\nset output 'trajectories.png'\nset multiplot layout 1,2 title '{title}'");
    s.push_str("set xlabel 'k'\nset ylabel 's'\n");
    states(&mut s, marks);
    let curves: Vec<String> =
        files.iter().map(|(f, t)| format!("'{f}' using 2:3 skip 1 with lines title '{t}'")).collect();
    let _ = writeln!(s, "plot {}", curves.join(", \\\n     "));
    s.push_str("unset label\nset xlabel 't'\nset ylabel 'k'\n");
    let curves: Vec<String> =
        files.iter().map(|(f, t)| format!("'{f}' using 1:2 skip 1 with lines title '{t}'")).collect();
    let _ = writeln!(s, "plot {}, \\\n     {k_u} with lines dt 2 lc rgb 'gray' title 'k_u'", curves.join(", \\\n     "));
    s.push_str("unset multiplot\n");
    s
}

/// Heat maps of snapshot CSVs (`i,j,v,w,k,s,P`).
pub fn snapshots(files: &[(String, String)]) -> String {
    let mut s = String::from(HEADER);
    s.push_str("set terminal pngcairo size 800,600\nset xlabel 'k'\nset ylabel 's'\nset view map\nunset key\n");
    for (f, title) in files {
        let png = f.trim_end_matches(".csv").to_string() + ".png";
        let _ = writeln!(s, "set output '{png}'\nset title '{title}'\nsplot '{f}' using 5:6:7 skip 1 with points pt 5 ps 0.5 palette");
    }
    s
}

/// Tipping time against `alpha` per `eps` and against `eps` per `alpha`.
pub fn tipping(by_eps: &[(String, String)], by_alpha: &[(String, String)], cap: f64) -> String {
    let mut s = String::from(HEADER);
    s.push_str("set terminal pngcairo size 1400,600\nset output 'tipping.png'\nset multiplot layout 1,2\n");
    let _ = writeln!(s, "set ylabel 'tipping time'\nset yrange [0:{}]", cap * 1.05);
    for (xlabel, files) in [("alpha", by_eps), ("eps", by_alpha)] {
        let _ = writeln!(s, "set xlabel '{xlabel}'");
        let curves: Vec<String> =
            files.iter().map(|(f, t)| format!("'{f}' using 1:2 skip 1 with linespoints title '{t}'")).collect();
        let _ = writeln!(s, "plot {}", curves.join(", \\\n     "));
    }
    s.push_str("unset multiplot\n");
    s
}

/// L-L / L-H markers from `phase.csv` (`alpha,eps,lh`).
pub fn phase() -> String {
    let mut s = String::from(HEADER);
    s.push_str("set terminal pngcairo size 800,600\nset output 'phase.png'\nset xlabel 'alpha'\nset ylabel 'eps'\n");
    s.push_str("plot 'phase.csv' using 1:($3==0?$2:1/0) skip 1 with points pt 7 lc rgb 'blue' title 'L-L', \\\n");
    s.push_str("     'phase.csv' using 1:($3==1?$2:1/0) skip 1 with points pt 5 lc rgb 'red' title 'L-H'\n");
    s
}

/// Distance `d` against `alpha`, one curve per `eps`.
pub fn distance(files: &[(String, String)]) -> String {
    let mut s = String::from(HEADER);
    s.push_str("set terminal pngcairo size 800,600\nset output 'distance.png'\nset xlabel 'alpha'\nset ylabel 'd'\n");
    let curves: Vec<String> =
        files.iter().map(|(f, t)| format!("'{f}' using 1:2 skip 1 with linespoints title '{t}'")).collect();
    let _ = writeln!(s, "plot {}", curves.join(", \\\n     "));
    s
}

/// Side-by-side heat maps of the Monte Carlo histogram and the density.
pub fn density_comparison() -> String {
    let mut s = String::from(HEADER);
    s.push_str("set terminal pngcairo size 1400,600\nset output 'comparison.png'\nset multiplot layout 1,2\n");
    s.push_str("set view map\nunset key\nset xlabel 'k'\nset ylabel 's'\n");
    s.push_str("set title 'Monte Carlo'\nsplot 'mc_density.csv' using 5:6:7 skip 1 with points pt 5 ps 0.5 palette\n");
    s.push_str("set title 'Fokker-Planck'\nsplot 'fpe_density.csv' using 5:6:7 skip 1 with points pt 5 ps 0.5 palette\n");
    s.push_str("unset multiplot\n");
    s
}

/// Sample paths from `trajectories.csv`.
pub fn sample_paths() -> String {
    let mut s = String::from(HEADER);
    s.push_str("set terminal pngcairo size 800,600\nset output 'sample_paths.png'\nset xlabel 'k'\nset ylabel 's'\nunset key\n");
    s.push_str("plot 'trajectories.csv' using 3:4:1 skip 1 with lines lc variable\n");
    s
}
