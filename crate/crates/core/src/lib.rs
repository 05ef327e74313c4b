//! Exact construction of half-integral-weight Hecke eigenforms on Γ₀(4), their Fourier
//! coefficients and Shimura lifts, and statistics of the signs of those coefficients.

pub mod arith;
pub mod hecke;
pub mod linalg;
pub mod modspace;
pub mod numfield;
pub mod poly;
pub mod qseries;
pub mod seriesnum;
pub mod shimura;
pub mod signstats;

pub(crate) mod serde_rational {
    use num_rational::BigRational;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn to_string(x: &BigRational) -> String {
        format!("{}/{}", x.numer(), x.denom())
    }

    pub fn parse(s: &str) -> Option<BigRational> {
        let (n, d) = s.split_once('/').unwrap_or((s, "1"));
        let n = n.trim().parse().ok()?;
        let d: num_bigint::BigInt = d.trim().parse().ok()?;
        (d != 0.into()).then(|| BigRational::new(n, d))
    }

    pub fn serialize<S: Serializer>(x: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&to_string(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let s = String::deserialize(d)?;
        parse(&s).ok_or_else(|| D::Error::custom(format!("invalid rational {s:?}")))
    }
}
