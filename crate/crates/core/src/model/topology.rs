use crate::error::{Error, Result};

/// Pool groups `P_i` over hidden units laid out on a 1-D ring.
///
/// Group `i` holds `{(i·stride + j) mod N : j < group_size}` and there are
/// `⌈N / stride⌉` groups. Adjacent groups overlap whenever `stride < group_size`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolingTopology {
    num_hidden: usize,
    group_size: usize,
    stride: usize,
    groups: Vec<Vec<usize>>,
    // inverse index: groups containing each hidden unit
    membership: Vec<Vec<usize>>,
}

impl PoolingTopology {
    pub fn ring(num_hidden: usize, group_size: usize, stride: usize) -> Result<Self> {
        if group_size == 0 || num_hidden < group_size {
            return Err(Error::InvalidArgument(format!(
                "need num_hidden >= group_size >= 1, got num_hidden={num_hidden}, group_size={group_size}"
            )));
        }
        if stride == 0 || stride > group_size {
            // a stride wider than the group would leave hidden units outside every group
            return Err(Error::InvalidArgument(format!(
                "need 1 <= stride <= group_size, got stride={stride}, group_size={group_size}"
            )));
        }
        let num_groups = num_hidden.div_ceil(stride);
        let groups: Vec<Vec<usize>> = (0..num_groups)
            .map(|i| {
                (0..group_size)
                    .map(|j| (i * stride + j) % num_hidden)
                    .collect()
            })
            .collect();
        let mut membership = vec![Vec::new(); num_hidden];
        for (i, g) in groups.iter().enumerate() {
            for &j in g {
                membership[j].push(i);
            }
        }
        Ok(Self {
            num_hidden,
            group_size,
            stride,
            groups,
            membership,
        })
    }

    pub fn num_hidden(&self) -> usize {
        self.num_hidden
    }

    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn group_size(&self) -> usize {
        self.group_size
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn group(&self, i: usize) -> &[usize] {
        &self.groups[i]
    }

    /// Indices of the groups that contain hidden unit `j`.
    pub fn groups_of(&self, j: usize) -> &[usize] {
        &self.membership[j]
    }
}
