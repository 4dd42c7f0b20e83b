use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hilbert::{bit_of, canonical_labels, PureState, QubitLabel, C64, ONE, ZERO};

/// An elementary gate on labeled qubits.
///
/// `Rotation` is the real rotation `R(θ)|0⟩ = cos θ|0⟩ + sin θ|1⟩`,
/// `R(θ)|1⟩ = −sin θ|0⟩ + cos θ|1⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    Rotation {
        target: QubitLabel,
        angle: f64,
    },
    Cnot {
        control: QubitLabel,
        target: QubitLabel,
    },
    Swap {
        a: QubitLabel,
        b: QubitLabel,
    },
    Cswap {
        control: QubitLabel,
        a: QubitLabel,
        b: QubitLabel,
    },
}

impl Gate {
    pub fn rotation(target: QubitLabel, angle: f64) -> Self {
        Gate::Rotation { target, angle }
    }

    pub fn cnot(control: QubitLabel, target: QubitLabel) -> Self {
        Gate::Cnot { control, target }
    }

    pub fn swap(a: QubitLabel, b: QubitLabel) -> Self {
        Gate::Swap { a, b }
    }

    pub fn cswap(control: QubitLabel, a: QubitLabel, b: QubitLabel) -> Self {
        Gate::Cswap { control, a, b }
    }

    pub fn labels(&self) -> Vec<QubitLabel> {
        match *self {
            Gate::Rotation { target, .. } => vec![target],
            Gate::Cnot { control, target } => vec![control, target],
            Gate::Swap { a, b } => vec![a, b],
            Gate::Cswap { control, a, b } => vec![control, a, b],
        }
    }

    fn validate(&self, register: &[QubitLabel]) -> Result<()> {
        let labels = self.labels();
        canonical_labels(&labels)
            .map_err(|_| Error::Labeling(format!("gate {self} repeats a qubit")))?;
        if let Gate::Rotation { angle, .. } = self {
            if !angle.is_finite() {
                return Err(Error::Domain(format!("non-finite rotation angle {angle}")));
            }
        }
        for l in labels {
            bit_of(register, l)?;
        }
        Ok(())
    }

    /// Applies the gate in place to amplitudes laid out over `register`.
    pub(crate) fn apply_in_place(&self, register: &[QubitLabel], amps: &mut [C64]) -> Result<()> {
        self.validate(register)?;
        let dim = amps.len();
        match *self {
            Gate::Rotation { target, angle } => {
                let m = 1usize << bit_of(register, target)?;
                let (s, c) = angle.sin_cos();
                for i in (0..dim).filter(|i| i & m == 0) {
                    let (a0, a1) = (amps[i], amps[i | m]);
                    amps[i] = a0 * c - a1 * s;
                    amps[i | m] = a0 * s + a1 * c;
                }
            }
            Gate::Cnot { control, target } => {
                let cm = 1usize << bit_of(register, control)?;
                let tm = 1usize << bit_of(register, target)?;
                for i in (0..dim).filter(|i| i & cm != 0 && i & tm == 0) {
                    amps.swap(i, i | tm);
                }
            }
            Gate::Swap { a, b } => {
                let am = 1usize << bit_of(register, a)?;
                let bm = 1usize << bit_of(register, b)?;
                for i in (0..dim).filter(|i| i & am != 0 && i & bm == 0) {
                    amps.swap(i, (i & !am) | bm);
                }
            }
            Gate::Cswap { control, a, b } => {
                let cm = 1usize << bit_of(register, control)?;
                let am = 1usize << bit_of(register, a)?;
                let bm = 1usize << bit_of(register, b)?;
                for i in (0..dim).filter(|i| i & cm != 0 && i & am != 0 && i & bm == 0) {
                    amps.swap(i, (i & !am) | bm);
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gate::Rotation { target, angle } => write!(f, "R_{target}({angle:.6})"),
            Gate::Cnot { control, target } => write!(f, "CNOT({control}->{target})"),
            Gate::Swap { a, b } => write!(f, "SWAP({a},{b})"),
            Gate::Cswap { control, a, b } => write!(f, "CSWAP({control};{a},{b})"),
        }
    }
}

/// Full `2^n × 2^n` matrix of `gate` on `register`.
pub fn gate_unitary(gate: &Gate, register: &[QubitLabel]) -> Result<DMatrix<C64>> {
    let register = canonical_labels(register)?;
    let dim = 1usize << register.len();
    let mut u = DMatrix::from_element(dim, dim, ZERO);
    for col in 0..dim {
        let mut v = vec![ZERO; dim];
        v[col] = ONE;
        gate.apply_in_place(&register, &mut v)?;
        u.set_column(col, &DVector::from_vec(v));
    }
    Ok(u)
}

/// An ordered gate list over a fixed register.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    register: Vec<QubitLabel>,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(register: &[QubitLabel]) -> Result<Self> {
        Ok(Circuit {
            register: canonical_labels(register)?,
            gates: Vec::new(),
        })
    }

    pub fn push(&mut self, gate: Gate) -> Result<&mut Self> {
        gate.validate(&self.register)?;
        self.gates.push(gate);
        Ok(self)
    }

    pub fn extend<I: IntoIterator<Item = Gate>>(&mut self, gates: I) -> Result<&mut Self> {
        for g in gates {
            self.push(g)?;
        }
        Ok(self)
    }

    pub fn with_gates(register: &[QubitLabel], gates: &[Gate]) -> Result<Self> {
        let mut c = Circuit::new(register)?;
        c.extend(gates.iter().copied())?;
        Ok(c)
    }

    pub fn register(&self) -> &[QubitLabel] {
        &self.register
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Runs the gates in order on `state`, whose register must match.
    pub fn apply(&self, state: &PureState) -> Result<PureState> {
        if state.labels() != self.register.as_slice() {
            return Err(Error::Labeling(format!(
                "state register {:?} does not match circuit register {:?}",
                state.labels(),
                self.register
            )));
        }
        let mut amps: Vec<C64> = state.amplitudes().iter().copied().collect();
        for g in &self.gates {
            g.apply_in_place(&self.register, &mut amps)?;
        }
        Ok(PureState::from_parts_unchecked(
            self.register.clone(),
            DVector::from_vec(amps),
        ))
    }

    /// Composite matrix, first gate applied first.
    pub fn unitary(&self) -> Result<DMatrix<C64>> {
        let dim = 1usize << self.register.len();
        let mut u = DMatrix::from_element(dim, dim, ZERO);
        for col in 0..dim {
            let mut v = vec![ZERO; dim];
            v[col] = ONE;
            for g in &self.gates {
                g.apply_in_place(&self.register, &mut v)?;
            }
            u.set_column(col, &DVector::from_vec(v));
        }
        Ok(u)
    }
}

/// Free-function form of [`Circuit::apply`].
pub fn apply_circuit(circuit: &Circuit, state: &PureState) -> Result<PureState> {
    circuit.apply(state)
}
