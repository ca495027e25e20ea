use serde::{Deserialize, Serialize};

use super::gate::GateOp;
use crate::error::{Error, Result};

/// A named contiguous run of operations inside a circuit, e.g. one classifier instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub name: String,
    pub start: usize,
    pub len: usize,
}

/// An ordered list of validated gate applications on a fixed register width.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    num_qubits: usize,
    ops: Vec<GateOp>,
    blocks: Vec<Block>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Self {
            num_qubits,
            ops: Vec::new(),
            blocks: Vec::new(),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn ops(&self) -> &[GateOp] {
        &self.ops
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn push(&mut self, op: GateOp) -> Result<&mut Self> {
        op.validate(self.num_qubits)?;
        self.ops.push(op);
        Ok(self)
    }

    /// Appends every operation of `other`, keeping its blocks.
    pub fn append(&mut self, other: &Circuit) -> Result<&mut Self> {
        if other.num_qubits > self.num_qubits {
            return Err(Error::validation(format!(
                "cannot append a {}-qubit circuit to a {}-qubit circuit",
                other.num_qubits, self.num_qubits
            )));
        }
        let offset = self.ops.len();
        self.ops.extend(other.ops.iter().cloned());
        self.blocks.extend(other.blocks.iter().map(|b| Block {
            name: b.name.clone(),
            start: b.start + offset,
            len: b.len,
        }));
        Ok(self)
    }

    /// Appends `other` and records it as a block called `name`.
    pub fn append_block(&mut self, name: &str, other: &Circuit) -> Result<&mut Self> {
        let start = self.ops.len();
        self.append(other)?;
        self.blocks.push(Block {
            name: name.to_owned(),
            start,
            len: other.ops.len(),
        });
        Ok(self)
    }

    pub fn count_blocks(&self, name: &str) -> usize {
        self.blocks.iter().filter(|b| b.name == name).count()
    }
}
