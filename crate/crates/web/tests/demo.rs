use liftc_web::{graph_json, ground_listing, loss_curve};

const TEMPLATE: &str = "\
@atom h/1 tanh.
@atom q/0 sigmoid.
h(X) :- Wh {3,1} : a_h(Y), b(X, Y).
h(X) :- Wo {3,1} : a_o(Y), b(X, Y).
Wq {1,3} :: q :- h(X).
";

const EXAMPLES: &str = "\
a_h(h1). a_h(h2).
b(h1, h2). b(h2, h1).
0 :: q?

a_h(h1). a_h(h2). a_o(o1).
b(h1, o1). b(o1, h1). b(h2, o1). b(o1, h2).
1 :: q?
";

#[test]
fn listing_has_one_section_per_query() {
    let text = ground_listing(TEMPLATE, EXAMPLES).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("% example")).count(), 2);
    assert_eq!(text.lines().filter(|l| l.starts_with("0: h(o1) <- ")).count(), 2);
}

#[test]
fn graph_reports_dot_and_sizes() {
    let v: serde_json::Value = serde_json::from_str(&graph_json(TEMPLATE, EXAMPLES, 1).unwrap()).unwrap();
    assert!(v["dot"].as_str().unwrap().starts_with("digraph"));
    assert!(v["nodes"].as_u64().unwrap() <= v["unprunedNodes"].as_u64().unwrap());
    assert!(graph_json(TEMPLATE, EXAMPLES, 5).is_err());
}

#[test]
fn curve_has_one_point_per_epoch_and_decreases() {
    let v: serde_json::Value = serde_json::from_str(&loss_curve(TEMPLATE, EXAMPLES, 40, 0.05, 1).unwrap()).unwrap();
    let loss: Vec<f64> = v["loss"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(loss.len(), 40);
    assert!(loss[39] < loss[0]);
    assert_eq!(loss_curve(TEMPLATE, EXAMPLES, 40, 0.05, 1).unwrap(), loss_curve(TEMPLATE, EXAMPLES, 40, 0.05, 1).unwrap());
}

#[test]
fn errors_are_reported_as_text() {
    assert!(ground_listing("h(X :- a.", EXAMPLES).unwrap_err().starts_with("template:"));
    assert!(loss_curve(TEMPLATE, "", 1, 0.1, 0).is_err());
}
