use opo_core::acceptance;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let quick = args.iter().any(|a| a == "--quick");
    let only: Vec<&str> = args.iter().filter(|a| a.starts_with("A")).map(|s| s.as_str()).collect();
    let all = acceptance::run_core_criteria(quick);
    for c in all {
        if only.is_empty() || only.contains(&c.id) {
            println!("{:4} {:50} {} ({:.2?} s)\n      {}", c.id, c.title,
                if c.passed { "PASS" } else { "FAIL" }, c.runtime_s, c.detail);
        }
    }
}
