use std::fs;
use groupoidkit::{fixtures, gspec};

fn main() {
    let dir = std::path::Path::new("fixtures");
    fs::create_dir_all(dir).unwrap();

    let eq = |ids: &[(&str, &str)], blocks: &str| {
        let units: Vec<String> = ids.iter().map(|(id, m)| format!("{{\"id\":\"{id}\",\"mass\":\"{m}\"}}")).collect();
        format!("{{\"equivalence\": {{\"units\": [{}], \"blocks\": {blocks}}}}}\n", units.join(", "))
    };
    fs::write(dir.join("r2.gspec"), eq(&[("a","1/2"),("b","1/2")], "[[\"a\",\"b\"]]")).unwrap();
    fs::write(dir.join("r2w.gspec"), eq(&[("a","2/3"),("b","1/3")], "[[\"a\",\"b\"]]")).unwrap();
    fs::write(dir.join("r3.gspec"), eq(&[("a","1/3"),("b","1/3"),("c","1/3")], "[[\"a\",\"b\",\"c\"]]")).unwrap();

    fs::write(dir.join("z2.gspec"), "{\"group\": {\"elements\": [\"e\",\"g\"], \"identity\": \"e\", \"table\": [[\"e\",\"g\"],[\"g\",\"e\"]]}}\n").unwrap();
    fs::write(dir.join("z3.gspec"), "{\"group\": {\"elements\": [\"e\",\"g\",\"h\"], \"identity\": \"e\", \"table\": [[\"e\",\"g\",\"h\"],[\"g\",\"h\",\"e\"],[\"h\",\"e\",\"g\"]]}}\n").unwrap();
    fs::write(dir.join("z2swap.gspec"), "{\"action\": {\"group\": {\"elements\": [\"e\",\"g\"], \"identity\": \"e\", \"table\": [[\"e\",\"g\"],[\"g\",\"e\"]]}, \"units\": [{\"id\":\"a\",\"mass\":\"1/2\"},{\"id\":\"b\",\"mass\":\"1/2\"}], \"action\": [[\"a\",\"e\",\"a\"],[\"b\",\"e\",\"b\"],[\"a\",\"g\",\"b\"],[\"b\",\"g\",\"a\"]]}}\n").unwrap();

    // s3 in the explicit table form.
    let s3 = gspec::groupoid_to_json(&fixtures::s3());
    fs::write(dir.join("s3.gspec"), format!("{s3}\n")).unwrap();

    // Negative fixture: corrupt compose(r, s) so only associativity breaks.
    let mut doc: serde_json::Value = serde_json::from_str(&s3).unwrap();
    let compose = doc["compose"].as_array_mut().unwrap();
    let mut hit = false;
    for entry in compose.iter_mut() {
        let triple = entry.as_array().unwrap();
        if triple[0] == "r" && triple[1] == "s" {
            assert_eq!(triple[2], "rrs");
            entry[2] = serde_json::Value::String("s".into());
            hit = true;
        }
    }
    assert!(hit, "corruption applied");
    fs::write(dir.join("bad_assoc.gspec"), format!("{}\n", serde_json::to_string_pretty(&doc).unwrap())).unwrap();

    fs::write(dir.join("zero_mass.gspec"), eq(&[("a","0"),("b","1")], "[[\"a\",\"b\"]]")).unwrap();

    fs::write(dir.join("q_r2.json"), "[\"ab\", \"ba\"]\n").unwrap();
    fs::write(dir.join("q_r3_path.json"), "[\"ab\", \"ba\", \"bc\", \"cb\"]\n").unwrap();
    fs::write(dir.join("q_cycle.json"), "[\"ab\", \"ac\", \"ba\", \"bc\", \"ca\", \"cb\"]\n").unwrap();

    let e1 = (-1.0f64).exp();
    fs::write(dir.join("f_exp.json"), format!("{{\"re\": {{\"aa\": 1.0, \"ab\": {e1}, \"ba\": {e1}, \"bb\": 1.0}}}}\n")).unwrap();
    fs::write(dir.join("f_nonpd.json"), "{\"re\": {\"aa\": 1.0, \"ab\": 2.0, \"ba\": 2.0, \"bb\": 1.0}}\n").unwrap();
    fs::write(dir.join("psi_tree.json"), "{\"re\": {\"ab\": 1.0, \"ba\": 1.0}}\n").unwrap();
    println!("fixtures written");
}
