//! Replays the bundled attack on `prot` and shows which names each step
//! makes public.

use sysgame::cli::attack_trace;

fn main() {
    let trace = attack_trace(10_000).expect("the bundled script replays");
    let mut seen = sysgame::nominal::NameSet::new();
    for (label, state) in trace.labels.iter().zip(&trace.states) {
        let public = state.public();
        let new: Vec<String> = public.iter().filter(|n| !seen.contains(n)).map(ToString::to_string).collect();
        println!("{label}");
        if !new.is_empty() {
            println!("    now public: {}", new.join(", "));
        }
        seen = public;
    }
}
