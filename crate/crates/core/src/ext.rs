//! Extended-real helpers. Infinities travel as `f64::INFINITY`; JSON carries
//! them as the strings `"inf"` and `"-inf"`.

use serde::{Deserialize, Deserializer, Serializer};

/// Text form used in CSV output: shortest round-trip digits, in exponent
/// form outside [1e-5, 1e16).
pub fn fmt(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else if x.is_nan() {
        "nan".to_string()
    } else if x == 0.0 || (1e-5..1e16).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn parse(s: &str) -> Option<f64> {
    match s.trim() {
        "inf" | "+inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        t => t.parse().ok(),
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Repr {
    Num(f64),
    Text(String),
}

fn from_repr<'de, D: Deserializer<'de>>(r: Repr) -> Result<f64, D::Error> {
    match r {
        Repr::Num(x) => Ok(x),
        Repr::Text(s) => {
            parse(&s).ok_or_else(|| serde::de::Error::custom(format!("bad extended real {s:?}")))
        }
    }
}

pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_str(&fmt(*x))
    }
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    from_repr::<D>(Repr::deserialize(d)?)
}

/// Same encoding for `Option<f64>`, with `None` as JSON null.
pub mod opt {
    use super::*;

    pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(v) => super::serialize(v, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        match Option::<Repr>::deserialize(d)? {
            Some(r) => from_repr::<D>(r).map(Some),
            None => Ok(None),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::{Deserialize, Serialize};

    #[derive(Serialize, Deserialize, PartialEq, Debug)]
    struct Holder {
        #[serde(with = "super")]
        x: f64,
        #[serde(with = "super::opt")]
        y: Option<f64>,
    }

    #[test]
    fn json_round_trip_of_infinities() {
        let h = Holder {
            x: f64::NEG_INFINITY,
            y: Some(f64::INFINITY),
        };
        let s = serde_json::to_string(&h).unwrap();
        assert_eq!(s, r#"{"x":"-inf","y":"inf"}"#);
        assert_eq!(serde_json::from_str::<Holder>(&s).unwrap(), h);
        let f: Holder = serde_json::from_str(r#"{"x":1.5,"y":null}"#).unwrap();
        assert_eq!(f, Holder { x: 1.5, y: None });
    }

    #[test]
    fn csv_text() {
        assert_eq!(fmt(f64::INFINITY), "inf");
        assert_eq!(fmt(-f64::INFINITY), "-inf");
        assert_eq!(fmt(0.25), "0.25");
        assert_eq!(parse("-inf"), Some(f64::NEG_INFINITY));
    }
}
