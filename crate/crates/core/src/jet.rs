use num_complex::Complex64;

type C = Complex64;

/// Value and first three complex derivatives of a holomorphic map at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub v: C,
    pub d1: C,
    pub d2: C,
    pub d3: C,
}

impl Jet {
    pub fn identity(z: C) -> Jet {
        Jet { v: z, d1: C::new(1.0, 0.0), d2: C::new(0.0, 0.0), d3: C::new(0.0, 0.0) }
    }

    /// Post-composes with φ, given (φ, φ', φ'', φ''') at self.v.
    #[inline]
    pub fn chain(&self, phi: [C; 4]) -> Jet {
        let d1sq = self.d1 * self.d1;
        Jet {
            v: phi[0],
            d1: phi[1] * self.d1,
            d2: phi[2] * d1sq + phi[1] * self.d2,
            d3: phi[3] * d1sq * self.d1 + 3.0 * phi[2] * self.d1 * self.d2 + phi[1] * self.d3,
        }
    }

    /// f''/f'
    pub fn pre_schwarzian(&self) -> C {
        self.d2 / self.d1
    }

    /// f'''/f' - 3/2 (f''/f')²
    pub fn schwarzian(&self) -> C {
        let p = self.d2 / self.d1;
        self.d3 / self.d1 - 1.5 * p * p
    }
}
