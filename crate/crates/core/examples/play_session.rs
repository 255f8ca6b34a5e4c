//! Drives a session against `prot` without the HTTP layer: plays the bundled
//! attack, then goes back two moves and branches off with a different one.

use sysgame::session::Session;
use sysgame::wire::parse_script;

fn show(s: &Session) {
    let v = s.view();
    println!("node {}: public {}, store {}", v["node"], v["publicNames"], v["visibleStore"]);
    for l in &s.current().labels {
        println!("    {l}");
    }
}

fn main() {
    let mut s = Session::new(sysgame::fixtures::PROT).unwrap();
    for mv in parse_script(sysgame::fixtures::ATTACK).unwrap() {
        s.apply(&mv).unwrap();
        show(&s);
    }

    let back = s.current().parent.and_then(|p| s.nodes[p].parent).unwrap();
    s.navigate(back).unwrap();
    let taken = s.current().children.clone();
    for mv in s.menu().into_iter().rev() {
        if let Ok(node) = s.apply(&mv) {
            if !taken.contains(&node) {
                break;
            }
            s.navigate(back).unwrap();
        }
    }
    show(&s);
    println!("{} nodes, history verifies: {}", s.nodes.len(), s.verify().ok);
    print!("{}", s.export());
}
