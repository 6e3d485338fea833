//! Double-double arithmetic (~31 significant digits).
//!
//! The Mittag-Leffler power series on the negative axis alternates with
//! intermediate terms up to e^{|z|^{1/alpha}} before cancelling down to an
//! O(1) result, so both the terms and the accumulator need more than f64
//! precision. This module implements the unevaluated-sum representation
//! hi + lo with the classical error-free transformations (Dekker/Knuth,
//! and the division/exp/log algorithms of the QD library), plus a
//! double-double log-gamma via Stirling's series with argument shifting.

/// Unevaluated sum of two doubles, |lo| <= ulp(hi)/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    // requires |a| >= |b|
    let s = a + b;
    let err = b - (s - a);
    (s, err)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let err = f64::mul_add(a, b, -p);
    (p, err)
}

#[allow(clippy::should_implement_trait)] // QD-style value API, not operator overloads
impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };
    /// ln 2 to double-double precision (hi is exactly f64::consts::LN_2).
    #[allow(clippy::approx_constant)]
    pub const LN2: Dd = Dd {
        hi: 0.693_147_180_559_945_3,
        lo: 2.319_046_813_846_299_6e-17,
    };
    /// ln(2π)/2, the constant term of Stirling's series.
    pub const HALF_LN_2PI: Dd = Dd {
        hi: 0.918_938_533_204_672_8,
        lo: -3.878_294_158_067_241_4e-17,
    };

    #[inline]
    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn add(self, o: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, o.hi);
        let (t1, t2) = two_sum(self.lo, o.lo);
        let s2 = s2 + t1;
        let (s1, s2) = quick_two_sum(s1, s2);
        let s2 = s2 + t2;
        let (hi, lo) = quick_two_sum(s1, s2);
        Dd { hi, lo }
    }

    #[inline]
    pub fn add_f64(self, o: f64) -> Dd {
        let (s1, s2) = two_sum(self.hi, o);
        let s2 = s2 + self.lo;
        let (hi, lo) = quick_two_sum(s1, s2);
        Dd { hi, lo }
    }

    #[inline]
    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    #[inline]
    pub fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    #[inline]
    pub fn mul(self, o: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, o.hi);
        let p2 = p2 + self.hi * o.lo + self.lo * o.hi;
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }

    #[inline]
    pub fn mul_f64(self, o: f64) -> Dd {
        let (p1, p2) = two_prod(self.hi, o);
        let p2 = p2 + self.lo * o;
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }

    #[inline]
    pub fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul_f64(q1));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul_f64(q2));
        let q3 = r.hi / o.hi;
        let (s1, s2) = quick_two_sum(q1, q2);
        Dd { hi: s1, lo: s2 }.add_f64(q3)
    }

    #[inline]
    pub fn div_f64(self, o: f64) -> Dd {
        self.div(Dd::from_f64(o))
    }

    #[inline]
    pub fn recip(self) -> Dd {
        Dd::ONE.div(self)
    }

    pub fn abs(self) -> Dd {
        if self.hi < 0.0 {
            self.neg()
        } else {
            self
        }
    }

    /// e^self by argument reduction against ln 2 and a Taylor series.
    pub fn exp(self) -> Dd {
        if self.hi < -745.0 {
            return Dd::ZERO;
        }
        if self.hi > 709.0 {
            return Dd::from_f64(f64::INFINITY);
        }
        let n = (self.hi / std::f64::consts::LN_2).round();
        let r = self.sub(Dd::LN2.mul_f64(n));
        // |r| <= ln2/2; Taylor to k = 26 leaves < 1e-38 relative
        let mut term = Dd::ONE;
        let mut sum = Dd::ONE;
        for k in 1..=26 {
            term = term.mul(r).div_f64(k as f64);
            sum = sum.add(term);
        }
        let scale = f64::powi(2.0, n as i32);
        Dd {
            hi: sum.hi * scale,
            lo: sum.lo * scale,
        }
    }

    /// Natural log via one Newton correction of the f64 estimate.
    pub fn ln(self) -> Dd {
        assert!(self.hi > 0.0, "dd ln of non-positive value");
        let y0 = self.hi.ln();
        // e = x * exp(-y0) - 1 is O(1e-16); ln(1+e) = e - e^2/2 + O(e^3)
        let e = self.mul(Dd::from_f64(-y0).exp()).add_f64(-1.0);
        let corr = e.sub(e.mul(e).mul_f64(0.5));
        Dd::from_f64(y0).add(corr)
    }

    /// log Γ(x) for x > 0 in double-double precision.
    ///
    /// Arguments below 35 are shifted up with Γ(x+1) = xΓ(x); at x >= 35
    /// Stirling's series with 13 Bernoulli terms is accurate to ~1e-38.
    pub fn ln_gamma(self) -> Dd {
        const SHIFT_POINT: f64 = 35.0;
        // B_{2n} / (2n (2n-1)) for n = 1..13
        const STIRLING: [Dd; 13] = [
            Dd { hi: 0.08333333333333333, lo: 4.625929269271485e-18 },
            Dd { hi: -0.002777777777777778, lo: 1.0601087908747154e-19 },
            Dd { hi: 0.0007936507936507937, lo: 6.883823317368282e-22 },
            Dd { hi: -0.0005952380952380953, lo: 5.36938218754726e-20 },
            Dd { hi: 0.0008417508417508417, lo: 3.6870174889237694e-20 },
            Dd { hi: -0.0019175269175269176, lo: 1.0675702776872475e-19 },
            Dd { hi: 0.00641025641025641, lo: 2.2240044563805217e-19 },
            Dd { hi: -0.029550653594771242, lo: 4.861760957508855e-19 },
            Dd { hi: 0.17964437236883057, lo: -6.401600482710946e-19 },
            Dd { hi: -1.3924322169059011, lo: 1.5837056989230303e-17 },
            Dd { hi: 13.402864044168393, lo: -6.154114101993966e-16 },
            Dd { hi: -156.84828462600203, lo: 9.391823141715389e-15 },
            Dd { hi: 2193.1033333333335, lo: -1.3339255626002948e-13 },
        ];
        if self.hi <= 0.0 {
            return Dd::from_f64(f64::INFINITY);
        }
        let mut s = self;
        let mut shift = Dd::ZERO;
        while s.hi < SHIFT_POINT {
            shift = shift.add(s.ln());
            s = s.add_f64(1.0);
        }
        // (s - 1/2) ln s - s + ln(2π)/2 + Σ c_n / s^{2n-1}
        let ln_s = s.ln();
        let mut acc = s.add_f64(-0.5).mul(ln_s).sub(s).add(Dd::HALF_LN_2PI);
        let inv = s.recip();
        let inv2 = inv.mul(inv);
        let mut p = inv;
        for c in STIRLING {
            acc = acc.add(c.mul(p));
            p = p.mul(inv2);
        }
        acc.sub(shift)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_dd_close(a: Dd, hi: f64, lo: f64, tol: f64) {
        let diff = a.sub(Dd { hi, lo }).abs();
        let scale = hi.abs().max(1e-300);
        assert!(
            diff.hi <= tol * scale,
            "dd mismatch: got ({:e},{:e}) want ({:e},{:e})",
            a.hi,
            a.lo,
            hi,
            lo
        );
    }

    #[test]
    fn arithmetic_identities() {
        let a = Dd::from_f64(1.0).div_f64(3.0);
        let b = a.mul_f64(3.0).add_f64(-1.0);
        assert!(b.hi.abs() < 1e-31);
        let c = Dd::from_f64(2.0).ln().exp();
        assert_dd_close(c, 2.0, 0.0, 1e-30);
    }

    #[test]
    fn exp_reference_values() {
        assert_dd_close(
            Dd::from_f64(1.234).exp(),
            3.43494186080076,
            1.1416461895439605e-16,
            1e-29,
        );
        assert_dd_close(
            Dd::from_f64(-35.75).exp(),
            2.9783262686202286e-16,
            2.2234287401079154e-34,
            1e-29,
        );
    }

    #[test]
    fn ln_reference_value() {
        assert_dd_close(
            Dd::from_f64(123.456).ln(),
            4.815884817283264,
            1.2224723590869397e-16,
            1e-30,
        );
    }

    #[test]
    fn ln_gamma_reference_values() {
        // frozen with 50-digit arithmetic
        assert_dd_close(
            Dd::from_f64(1.5).ln_gamma(),
            -0.12078223763524522,
            -4.1797047492946264e-18,
            1e-28,
        );
        assert_dd_close(
            Dd::from_f64(7.25).ln_gamma(),
            7.0521854507385395,
            -8.449924820091046e-17,
            1e-29,
        );
        assert_dd_close(
            Dd::from_f64(34.9).ln_gamma(),
            88.22687316723605,
            5.34405751170399e-15,
            1e-29,
        );
        assert_dd_close(
            Dd::from_f64(100.3).ln_gamma(),
            360.5147057290581,
            1.0745391438920611e-14,
            1e-29,
        );
        assert_dd_close(
            Dd::from_f64(0.37).ln_gamma(),
            0.8769468194848793,
            1.0432490894108676e-17,
            1e-28,
        );
    }

    #[test]
    fn ln_gamma_integer_factorials() {
        // Γ(7) = 720
        let g = Dd::from_f64(7.0).ln_gamma().exp();
        assert_dd_close(g, 720.0, 0.0, 1e-28);
    }
}
