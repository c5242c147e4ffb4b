use qpolar::matcore::Mat;
use qpolar::polarity::{ConvexBody, EllipsoidBody};
use serde_json::{json, Value};

/// Finite floats as JSON numbers, everything else as `null`.
pub fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map(Value::Number).unwrap_or(Value::Null)
}

pub fn nums(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|x| num(*x)).collect())
}

pub fn mat(m: &Mat) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| num(m[(i, j)])).collect()))
            .collect(),
    )
}

pub fn ellipsoid(e: &EllipsoidBody) -> Value {
    json!({
        "kind": "ellipsoid",
        "space": e.space().name(),
        "shape": mat(e.shape().as_mat()),
        "level": num(e.level()),
    })
}

pub fn body(b: &ConvexBody) -> Value {
    match b {
        ConvexBody::Ellipsoid(e) => ellipsoid(e),
        ConvexBody::Box(x) => json!({
            "kind": "box",
            "space": x.space().name(),
            "half_widths": nums(x.half_widths()),
        }),
        ConvexBody::CrossPolytope(c) => json!({
            "kind": "cross-polytope",
            "space": c.space().name(),
            "weights": nums(c.weights()),
            "level": num(c.level()),
        }),
    }
}

/// A note about a closed form that disagrees with the computed value.
pub fn flag(id: &str, note: &str, values: Value) -> Value {
    json!({ "id": id, "note": note, "values": values })
}
