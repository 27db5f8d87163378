//! Fixed-precision big floats for the minimax fits.
//!
//! Best-approximation errors of the imaginary-time kernel fall far below
//! double precision at moderate degree, so the exchange iteration runs on
//! 256-bit mantissas.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::ops::{Add, Div, Mul, Neg, Sub};

use astro_float::{BigFloat, Consts, RoundingMode, Sign};

pub(crate) const PREC: usize = 256;
const RM: RoundingMode = RoundingMode::ToEven;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("astro-float constants cache"));
}

#[derive(Clone, Debug)]
pub(crate) struct Hp(BigFloat);

impl Hp {
    pub fn from_f64(x: f64) -> Self {
        Self(BigFloat::from_f64(x, PREC))
    }

    pub fn zero() -> Self {
        Self::from_f64(0.0)
    }

    pub fn one() -> Self {
        Self::from_f64(1.0)
    }

    pub fn exp(&self) -> Self {
        CONSTS.with(|cc| Self(self.0.exp(PREC, RM, &mut cc.borrow_mut())))
    }

    pub fn abs(&self) -> Self {
        Self(self.0.abs())
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// Nearest double, from the top mantissa word.
    pub fn to_f64(&self) -> f64 {
        if self.0.is_zero() {
            return 0.0;
        }
        let Some((words, _, sign, exp, _)) = self.0.as_raw_parts() else {
            return f64::NAN;
        };
        let top = *words.last().expect("non-empty mantissa") as f64;
        let e = exp - 64;
        let mag = top * 2f64.powi(e / 2) * 2f64.powi(e - e / 2);
        match sign {
            Sign::Neg => -mag,
            Sign::Pos => mag,
        }
    }
}

impl PartialEq for Hp {
    fn eq(&self, other: &Self) -> bool {
        self.partial_cmp(other) == Some(Ordering::Equal)
    }
}

impl PartialOrd for Hp {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.cmp(&other.0).map(|s| s.cmp(&0))
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident) => {
        impl $tr<&Hp> for &Hp {
            type Output = Hp;
            fn $m(self, rhs: &Hp) -> Hp {
                Hp(self.0.$m(&rhs.0, PREC, RM))
            }
        }
        impl $tr<Hp> for Hp {
            type Output = Hp;
            fn $m(self, rhs: Hp) -> Hp {
                Hp(self.0.$m(&rhs.0, PREC, RM))
            }
        }
        impl $tr<&Hp> for Hp {
            type Output = Hp;
            fn $m(self, rhs: &Hp) -> Hp {
                Hp(self.0.$m(&rhs.0, PREC, RM))
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
binop!(Div, div);

impl Neg for Hp {
    type Output = Hp;
    fn neg(self) -> Hp {
        Hp(self.0.neg())
    }
}
