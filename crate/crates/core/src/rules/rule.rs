use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;
use crate::judgment::Side;

macro_rules! rules {
    ($($v:ident => $s:literal),* $(,)?) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum Rule { $($v),* }

        impl Rule {
            pub const ALL: &'static [Rule] = &[$(Rule::$v),*];

            pub fn name(self) -> &'static str {
                match self { $(Rule::$v => $s),* }
            }
        }

        impl FromStr for Rule {
            type Err = Error;
            fn from_str(s: &str) -> Result<Rule, Error> {
                match s {
                    $($s => Ok(Rule::$v),)*
                    _ => Err(Error::Invalid(format!("unknown rule {s}"))),
                }
            }
        }
    };
}

rules! {
    Skip => "Skip",
    Init => "Init", InitL => "Init-L", InitR => "Init-R",
    Ut => "UT", UtL => "UT-L", UtR => "UT-R",
    So => "SO", SoL => "SO-L", SoR => "SO-R",
    Sc => "SC", ScPlus => "SC+",
    If => "IF", IfW => "IF-w", IfL => "IF-L", IfR => "IF-R",
    If1 => "IF1", If1L => "IF1-L", If1R => "IF1-R",
    Lp => "LP", LpL => "LP-L", LpR => "LP-R",
    Lp1 => "LP1", Lp1L => "LP1-L", Lp1R => "LP1-R",
    Conseq => "Conseq", Weaken => "Weaken", Case => "Case", Frame => "Frame",
    InitP => "Init-P", InitPL => "Init-P-L", InitPR => "Init-P-R",
    SoP => "SO-P", SoPL => "SO-P-L", SoPR => "SO-P-R",
    IfP => "IF-P", IfPL => "IF-P-L", IfPR => "IF-P-R",
    LpP => "LP-P", LpPL => "LP-P-L", LpPR => "LP-P-R",
}

/// Which programs a rule inspects.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sides {
    Both,
    Only(Side),
}

impl Rule {
    pub fn sides(self) -> Sides {
        use Rule::*;
        match self {
            InitL | UtL | SoL | IfL | If1L | LpL | Lp1L | InitPL | SoPL | IfPL | LpPL => Sides::Only(Side::Left),
            InitR | UtR | SoR | IfR | If1R | LpR | Lp1R | InitPR | SoPR | IfPR | LpPR => Sides::Only(Side::Right),
            _ => Sides::Both,
        }
    }

    /// Rules of the projective system only.
    pub fn is_projective(self) -> bool {
        use Rule::*;
        matches!(self, InitP | InitPL | InitPR | SoP | SoPL | SoPR | IfP | IfPL | IfPR | LpP | LpPL | LpPR)
    }

    /// Rules shared by both systems.
    pub fn is_shared(self) -> bool {
        use Rule::*;
        matches!(self, Skip | Ut | UtL | UtR | Sc | Conseq | Frame)
    }

    /// Rules whose postcondition is computed from the precondition.
    pub fn is_forward(self) -> bool {
        use Rule::*;
        matches!(self, InitP | InitPL | InitPR | SoP | SoPL | SoPR)
    }

    pub fn is_atomic(self) -> bool {
        use Rule::*;
        matches!(self, Skip | Init | InitL | InitR | Ut | UtL | UtR | So | SoL | SoR | InitP | InitPL | InitPR | SoP | SoPL | SoPR)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Rule {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Rule {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Rule, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
