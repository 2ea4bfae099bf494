use rqpd_core::error::Error;
use rqpd_core::lang::{parse, pretty, tag_copy, Stmt};
use rqpd_core::linalg::gates;

const QBF: &str = "let U = sqrt(0.5) * [[1, 1], [1, -1]];
let N = meas { 0: [[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,0]], 1: [[0,0,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,1]] };
qx := |0>; qy := |0>; while N[qx,qy] = 1 do qx := U[qx]; qy := U[qy] od; trout qy";

#[test]
fn skip_parses() {
    let p = parse("skip").unwrap();
    assert_eq!(p.body, Stmt::Skip);
    assert_eq!(pretty(&p), "skip");
}

#[test]
fn init_then_hadamard_prints_on_one_line() {
    let p = parse("q := |0>; q := H[q]").unwrap();
    assert_eq!(pretty(&p), "q := |0>; q := H[q]");
    match &p.body {
        Stmt::Seq(v) => assert!(matches!(&v[1], Stmt::Unitary { gate, .. } if gate.matrix == gates::hadamard())),
        _ => panic!("expected a sequence"),
    }
}

#[test]
fn qbf_round_trips() {
    let p = parse(QBF).unwrap();
    assert_eq!(p.inputs(), ["qx", "qy"]);
    assert_eq!(p.outputs(), ["qx"]);
    let text = pretty(&p);
    assert_eq!(parse(&text).unwrap(), p, "{text}");
}

#[test]
fn non_unitary_gate_is_rejected_with_position() {
    let err = parse("let V = [[1, 1], [0, 1]];\nq := V[q]").unwrap_err();
    match err {
        Error::Parse { line, col, msg } => {
            assert_eq!((line, col), (2, 1));
            assert!(msg.contains("non-unitary"), "{msg}");
        }
        e => panic!("unexpected {e:?}"),
    }
}

#[test]
fn incomplete_measurement_is_rejected() {
    let err = parse("let N = meas { 0: [[1,0],[0,0]], 1: [[0,0],[0,0.5]] };\nif N[q] = 0 -> skip [] 1 -> skip fi").unwrap_err();
    assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
}

#[test]
fn use_after_trout_is_rejected() {
    assert!(parse("trout q; q := X[q]").is_err());
    assert!(parse("trout q; q := ZERO[]; q := X[q]").is_ok());
}

#[test]
fn complex_literals_round_trip() {
    let p = parse("let G = [[0.6, -0.8i], [0.8i, -0.6]]; q := G[q]").unwrap();
    assert_eq!(parse(&pretty(&p)).unwrap(), p);
    let q = parse("let G = [[1.0+0.0i, 0], [0, -i]]; q := G[q]").unwrap();
    assert_eq!(parse(&pretty(&q)).unwrap(), q);
}

#[test]
fn branches_and_dims() {
    let src = "var p : 3, c : 2;\nif M[c] = 1 -> p := I[p] [] 0 -> skip fi";
    let p = parse(src).unwrap();
    assert_eq!(p.input_dim(), 6);
    let text = pretty(&p);
    assert_eq!(parse(&text).unwrap(), p, "{text}");
}

#[test]
fn tag_copy_renames() {
    let p = parse("q := |0>; q := H[q]").unwrap();
    let a = tag_copy(&p, 1);
    let b = tag_copy(&p, 2);
    assert_eq!(a.inputs(), ["q<1>"]);
    assert!(a.registers.iter().all(|r| b.registers.iter().all(|s| s.name != r.name)));
    assert_eq!(parse(&pretty(&a)).unwrap(), a);
}
