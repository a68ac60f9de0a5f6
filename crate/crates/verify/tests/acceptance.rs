use schrolab_verify::criteria;

fn main() {
    let scratch = tempfile::tempdir().unwrap();
    let mut lines = Vec::new();
    let mut failed = 0;
    for (i, (name, check)) in criteria().iter().enumerate() {
        let dir = scratch.path().join(format!("c{}", i + 1));
        let o = check(&dir);
        if !o.pass {
            failed += 1;
        }
        lines.push(format!(
            "criterion {:>2} {name}: {} ({})",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        ));
    }
    println!();
    for line in &lines {
        println!("{line}");
    }
    println!(
        "acceptance: {} of {} criteria pass",
        lines.len() - failed,
        lines.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
