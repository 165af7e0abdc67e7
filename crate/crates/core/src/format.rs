//! The instance document.
//!
//! ```text
//! {
//!   "agents": [
//!     {"share": "1/4", "values": ["-1/4", "-1/4", "-1/4", "-1/4"]},
//!     {"share": "3/4", "values": ["-3/8", "-3/8", "-1/8", "-1/8"]}
//!   ]
//! }
//! ```
//!
//! The document is JSON. Every number is a string holding either a fraction
//! `p/q` or a decimal literal such as `-0.375`; both are read exactly.
//! [`serialize_instance`] always writes reduced fractions, so
//! `serialize(parse(serialize(x))) == serialize(x)` byte for byte.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Deserialize;
use thiserror::Error;

use crate::model::{Instance, ModelError};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RationalError {
    #[error("empty number")]
    Empty,
    #[error("`{0}` is not a rational literal")]
    Malformed(String),
    #[error("`{0}` has a zero denominator")]
    ZeroDenominator(String),
    #[error("`{0}` has a negative denominator")]
    NegativeDenominator(String),
    #[error("`{0}` does not fit the scalar type")]
    OutOfRange(String),
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("malformed document: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("{field}: {source}")]
    Number {
        field: String,
        #[source]
        source: RationalError,
    },
    #[error("{0}")]
    Shape(#[from] ModelError),
}

fn digits(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())
}

fn big(s: &str) -> BigInt {
    s.parse().expect("digit string")
}

/// Parses `p/q`, an integer, or a decimal literal into an exact rational.
pub fn parse_big_rational(text: &str) -> Result<BigRational, RationalError> {
    let t = text.trim();
    if t.is_empty() {
        return Err(RationalError::Empty);
    }
    let malformed = || RationalError::Malformed(t.to_string());
    let (negative, body) = if let Some(rest) = t.strip_prefix('-') {
        (true, rest)
    } else if let Some(rest) = t.strip_prefix('\u{2212}') {
        (true, rest)
    } else if let Some(rest) = t.strip_prefix('+') {
        (false, rest)
    } else {
        (false, t)
    };
    let value = if let Some((num, den)) = body.split_once('/') {
        if !digits(num) {
            return Err(malformed());
        }
        if let Some(den_digits) = den.strip_prefix('-') {
            if digits(den_digits) {
                return Err(RationalError::NegativeDenominator(t.to_string()));
            }
            return Err(malformed());
        }
        if !digits(den) {
            return Err(malformed());
        }
        let den = big(den);
        if den.is_zero() {
            return Err(RationalError::ZeroDenominator(t.to_string()));
        }
        BigRational::new(big(num), den)
    } else if let Some((int, frac)) = body.split_once('.') {
        if !(digits(int) || int.is_empty()) || !digits(frac) {
            return Err(malformed());
        }
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        let int = if int.is_empty() { BigInt::zero() } else { big(int) };
        BigRational::new(int * &scale + big(frac), scale)
    } else if digits(body) {
        BigRational::from_integer(big(body))
    } else {
        return Err(malformed());
    };
    Ok(if negative { -value } else { value })
}

pub fn parse_rational<T: Scalar>(text: &str) -> Result<T, RationalError> {
    let value = parse_big_rational(text)?;
    T::from_big(&value).ok_or_else(|| RationalError::OutOfRange(text.trim().to_string()))
}

/// Formats an exact rational as `p/q`, or `p` when the denominator is 1.
pub fn format_rational<T: Scalar>(value: &T) -> String {
    let v = value.to_big();
    if v.denom().is_one() {
        v.numer().to_string()
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}

/// Rounded decimal rendering for display columns only.
pub fn format_decimal<T: Scalar>(value: &T, places: usize) -> String {
    let v = value.to_big();
    let scale = BigRational::from_integer(num_traits::pow(BigInt::from(10), places));
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let scaled = v.abs() * scale;
    let rounded = (scaled + half).floor().to_integer();
    let s = format!("{:0>width$}", rounded.to_string(), width = places + 1);
    let (int, frac) = s.split_at(s.len() - places);
    let sign = if v.is_negative() && rounded > BigInt::zero() {
        "-"
    } else {
        ""
    };
    if places == 0 {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac}")
    }
}

#[derive(Debug, Deserialize)]
struct AgentDoc {
    share: String,
    values: Vec<String>,
}

#[derive(Debug, Deserialize)]
struct InstanceDoc {
    agents: Vec<AgentDoc>,
}

/// Reads an instance document. Only the matrix shape is checked here; use
/// [`Instance::validate`] for the share and sign invariants.
pub fn parse_instance<T: Scalar>(text: &str) -> Result<Instance<T>, ParseError> {
    let doc: InstanceDoc = serde_json::from_str(text)?;
    let mut shares = Vec::with_capacity(doc.agents.len());
    let mut values = Vec::with_capacity(doc.agents.len());
    for (i, agent) in doc.agents.iter().enumerate() {
        shares.push(parse_rational(&agent.share).map_err(|source| ParseError::Number {
            field: format!("agents[{i}].share"),
            source,
        })?);
        let row = agent
            .values
            .iter()
            .enumerate()
            .map(|(j, v)| {
                parse_rational(v).map_err(|source| ParseError::Number {
                    field: format!("agents[{i}].values[{j}]"),
                    source,
                })
            })
            .collect::<Result<Vec<T>, _>>()?;
        values.push(row);
    }
    Ok(Instance::new(shares, values)?)
}

pub(crate) fn quoted_list<T: Scalar>(values: &[T]) -> String {
    let items: Vec<String> = values
        .iter()
        .map(|v| format!("\"{}\"", format_rational(v)))
        .collect();
    format!("[{}]", items.join(", "))
}

/// Writes the canonical instance document, one agent per line.
pub fn serialize_instance<T: Scalar>(inst: &Instance<T>) -> String {
    if inst.agents() == 0 {
        return "{\n  \"agents\": []\n}\n".to_string();
    }
    let lines: Vec<String> = (0..inst.agents())
        .map(|i| {
            format!(
                "    {{\"share\": \"{}\", \"values\": {}}}",
                format_rational(inst.share(i)),
                quoted_list(inst.row(i))
            )
        })
        .collect();
    format!("{{\n  \"agents\": [\n{}\n  ]\n}}\n", lines.join(",\n"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::paper_table;
    use crate::Ratio;
    use num_rational::Rational64;

    fn q(n: i64, d: i64) -> Ratio {
        Ratio::ratio(n, d)
    }

    #[test]
    fn literals() {
        assert_eq!(parse_rational::<Ratio>("3/4").unwrap(), q(3, 4));
        assert_eq!(parse_rational::<Ratio>("-6/8").unwrap(), q(-3, 4));
        assert_eq!(parse_rational::<Ratio>("-0.375").unwrap(), q(-3, 8));
        assert_eq!(parse_rational::<Ratio>("\u{2212}0.375").unwrap(), q(-3, 8));
        assert_eq!(parse_rational::<Ratio>(".5").unwrap(), q(1, 2));
        assert_eq!(parse_rational::<Ratio>("7").unwrap(), q(7, 1));
        assert_eq!(parse_rational::<Ratio>(" -0 ").unwrap(), q(0, 1));
    }

    #[test]
    fn bad_literals() {
        assert_eq!(
            parse_rational::<Ratio>("1/0"),
            Err(RationalError::ZeroDenominator("1/0".into()))
        );
        assert_eq!(
            parse_rational::<Ratio>("1/-2"),
            Err(RationalError::NegativeDenominator("1/-2".into()))
        );
        assert_eq!(parse_rational::<Ratio>(""), Err(RationalError::Empty));
        for bad in ["abc", "1/2/3", "1.", "--1", "1e3", "0x10", "1/ 2"] {
            assert!(
                matches!(parse_rational::<Ratio>(bad), Err(RationalError::Malformed(_))),
                "{bad}"
            );
        }
        assert!(matches!(
            parse_rational::<Rational64>("1/100000000000000000000"),
            Err(RationalError::OutOfRange(_))
        ));
    }

    #[test]
    fn table1_round_trip() {
        let t1 = paper_table::<Ratio>(1, &Default::default()).unwrap();
        let text = serialize_instance(&t1);
        assert_eq!(
            text,
            "{\n  \"agents\": [\n    {\"share\": \"1/4\", \"values\": [\"-1/4\", \"-1/4\", \"-1/4\", \"-1/4\"]},\n    {\"share\": \"3/4\", \"values\": [\"-3/8\", \"-3/8\", \"-1/8\", \"-1/8\"]}\n  ]\n}\n"
        );
        let back: Instance<Ratio> = parse_instance(&text).unwrap();
        assert_eq!(back, t1);
        assert_eq!(serialize_instance(&back), text);
    }

    #[test]
    fn errors_carry_context() {
        let err = parse_instance::<Ratio>(
            r#"{"agents": [{"share": "1", "values": ["-1/2", "1/0"]}]}"#,
        )
        .unwrap_err();
        assert_eq!(err.to_string(), "agents[0].values[1]: `1/0` has a zero denominator");

        let err = parse_instance::<Ratio>("{\"agents\": [\n  {\"share\": 1}\n]}").unwrap_err();
        assert!(matches!(err, ParseError::Syntax(_)));
        assert!(err.to_string().contains("line 2"), "{err}");

        let err = parse_instance::<Ratio>(
            r#"{"agents": [{"share": "1/2", "values": ["-1"]}, {"share": "1/2", "values": []}]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, ParseError::Shape(ModelError::RaggedRow { .. })));
    }

    #[test]
    fn decimal_display() {
        assert_eq!(format_decimal(&q(4, 3), 4), "1.3333");
        assert_eq!(format_decimal(&q(-3, 8), 2), "-0.38");
        assert_eq!(format_decimal(&q(-1, 1000), 2), "0.00");
        assert_eq!(format_decimal(&q(7, 1), 0), "7");
        assert_eq!(format_rational(&q(-4, 2)), "-2");
    }

    #[test]
    fn empty_instance_round_trip() {
        let inst = Instance::<Ratio>::new(vec![], vec![]).unwrap();
        let text = serialize_instance(&inst);
        assert_eq!(parse_instance::<Ratio>(&text).unwrap(), inst);
    }
}
