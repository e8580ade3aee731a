use std::fmt;
use std::str::FromStr;

macro_rules! points {
    ($($variant:ident = $code:literal => $name:literal,)*) => {
        /// A named message slot in some protocol. Names are stable: fault scripts
        /// and meter reports refer to them.
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum Point {
            $($variant,)*
        }

        impl Point {
            pub const ALL: &'static [Point] = &[$(Point::$variant,)*];

            pub fn name(self) -> &'static str {
                match self {
                    $(Point::$variant => $name,)*
                }
            }

            pub fn code(self) -> u16 {
                match self {
                    $(Point::$variant => $code,)*
                }
            }

            pub fn from_code(code: u16) -> Option<Point> {
                match code {
                    $($code => Some(Point::$variant),)*
                    _ => None,
                }
            }
        }

        impl FromStr for Point {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($name => Ok(Point::$variant),)*
                    _ => Err(format!("unknown protocol point `{s}`")),
                }
            }
        }
    };
}

points! {
    InputM = 1 => "sh.m",
    InputDigest = 2 => "sh.digest",
    MulGamma = 10 => "mul.gamma",
    MulMz = 11 => "mul.mz",
    MulChi = 12 => "mul.chi",
    MStar = 13 => "mul.mstar",
    MStarDigest = 14 => "mul.mstar.digest",
    MStarZ = 15 => "mul.mstar.z",
    RecShare = 20 => "rec.share",
    RecDigest = 21 => "rec.digest",
    TripGamma = 30 => "trip.gamma",
    TripMz = 31 => "trip.mz",
    TripOpen = 32 => "trip.open",
    TripOpenDigest = 33 => "trip.open.digest",
    PrcShare = 40 => "prc.share",
    PrcDigest = 41 => "prc.digest",
    PrcTau = 42 => "prc.tau",
    FairCommit = 50 => "frec.commit",
    FairOrigin = 51 => "frec.origin",
    FairCommitM = 52 => "frec.commit.m",
    FairSignal = 53 => "frec.signal",
    FairForward = 54 => "frec.forward",
    FairOpen = 55 => "frec.open",
    DotMz = 60 => "dot.mz",
    BitextBlind = 70 => "bitext.blind",
    BitextQ = 71 => "bitext.q",
    BitextQDigest = 72 => "bitext.q.digest",
    BitextRec = 73 => "bitext.rec",
    BitextRecDigest = 74 => "bitext.rec.digest",
    Test = 90 => "test",
    Abort = 99 => "abort",
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_and_codes_are_unique_and_roundtrip() {
        let mut names = std::collections::HashSet::new();
        let mut codes = std::collections::HashSet::new();
        for p in Point::ALL {
            assert!(names.insert(p.name()));
            assert!(codes.insert(p.code()));
            assert_eq!(p.name().parse::<Point>().unwrap(), *p);
            assert_eq!(Point::from_code(p.code()), Some(*p));
        }
        assert!("nope".parse::<Point>().is_err());
    }
}
