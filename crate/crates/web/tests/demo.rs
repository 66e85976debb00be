use ctrie_web::TrieDemo;
use serde_json::Value;

fn snapshot(d: &TrieDemo) -> Value {
    serde_json::from_str(&d.snapshot()).unwrap()
}

#[test]
fn operations_round_trip() {
    let d = TrieDemo::new();
    d.insert(1, 10);
    d.insert(33, 330);
    assert_eq!(d.lookup(33), Some(330));
    assert_eq!(d.keys(), vec![1, 33]);
    assert_eq!(d.remove(1), Some(10));
    assert_eq!(d.lookup(1), None);
    assert_eq!(d.remove(1), None);
}

#[test]
fn snapshot_shows_second_level() {
    let d = TrieDemo::new();
    d.insert(1, 10);
    d.insert(33, 330);
    let s = snapshot(&d);
    assert_eq!(s["summary"]["violations"], 0);
    let root = &s["root"];
    assert_eq!(root["kind"], "inode");
    let cn = &root["main"];
    assert_eq!(cn["kind"], "cnode");
    assert_eq!(cn["bmp"], 2);
    let child = &cn["branches"][0];
    assert_eq!(child["index"], 1);
    assert_eq!(child["node"]["main"]["bmp"], 3);
    assert_eq!(child["node"]["main"]["branches"][1]["node"]["key"], "33");
    assert_eq!(d.path(33), "[1,1]");
}

#[test]
fn empty_snapshot() {
    let d = TrieDemo::default();
    let s = snapshot(&d);
    assert!(s["root"].is_null());
    assert_eq!(s["summary"]["l"], 0);
    d.insert(5, 5);
    d.remove(5);
    let s = snapshot(&d);
    assert_eq!(s["root"]["kind"], "inode");
    assert!(s["root"]["main"].is_null());
}
