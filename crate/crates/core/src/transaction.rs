//! Customers and transactions of the synthetic payments stream.

use core::fmt;
use core::str;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::{Error, Result};

/// Two-letter ISO country code.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Country([u8; 2]);

impl Country {
    pub const fn from_code(code: &[u8; 2]) -> Self {
        Country(*code)
    }

    pub fn parse(code: &str) -> Result<Self> {
        let bytes = code.as_bytes();
        match bytes {
            [a, b] if a.is_ascii_uppercase() && b.is_ascii_uppercase() => Ok(Country([*a, *b])),
            [a, b] => Err(Error::UnknownCountry([*a, *b])),
            _ => Err(Error::UnknownCountry(*b"??")),
        }
    }

    pub fn as_str(&self) -> &str {
        // constructed only from ASCII letters
        str::from_utf8(&self.0).unwrap_or("??")
    }
}

impl fmt::Debug for Country {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Country {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Country {
    fn serialize<S: Serializer>(&self, serializer: S) -> core::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Country {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> core::result::Result<Self, D::Error> {
        struct CodeVisitor;

        impl Visitor<'_> for CodeVisitor {
            type Value = Country;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a two-letter uppercase country code")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> core::result::Result<Country, E> {
                Country::parse(v).map_err(|_| E::invalid_value(de::Unexpected::Str(v), &self))
            }
        }

        deserializer.deserialize_str(CodeVisitor)
    }
}

/// One of five age bands, `0` youngest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct AgeGroup(u8);

impl AgeGroup {
    pub const COUNT: usize = 5;
    const LABELS: [&'static str; 5] = ["18-25", "26-35", "36-50", "51-65", "65+"];

    pub fn new(band: u8) -> Option<Self> {
        (usize::from(band) < Self::COUNT).then_some(AgeGroup(band))
    }

    pub fn index(self) -> usize {
        usize::from(self.0)
    }

    pub fn label(self) -> &'static str {
        Self::LABELS[self.index()]
    }
}

impl TryFrom<u8> for AgeGroup {
    type Error = &'static str;

    fn try_from(band: u8) -> core::result::Result<Self, Self::Error> {
        AgeGroup::new(band).ok_or("age group must be below 5")
    }
}

impl From<AgeGroup> for u8 {
    fn from(group: AgeGroup) -> u8 {
        group.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Customer {
    pub country: Country,
    pub pep: bool,
    pub legal: bool,
    pub age_group: AgeGroup,
    pub children: bool,
    pub employed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Party {
    Sender,
    Receiver,
}

impl Party {
    pub fn name(self) -> &'static str {
        match self {
            Party::Sender => "sender",
            Party::Receiver => "receiver",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transaction {
    pub id: u64,
    pub sender: Customer,
    pub receiver: Customer,
    pub amount: f64,
    pub fraud: bool,
}

impl Transaction {
    pub fn party(&self, party: Party) -> &Customer {
        match party {
            Party::Sender => &self.sender,
            Party::Receiver => &self.receiver,
        }
    }
}
