use crate::config::DilationMode;

/// Per-block dilation rates for the downstream path, `B` blocks of `L`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DilationSchedule {
    blocks: Vec<Vec<usize>>,
}

impl DilationSchedule {
    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block(&self, b: usize) -> &[usize] {
        &self.blocks[b]
    }

    pub fn flat(&self) -> impl Iterator<Item = usize> + '_ {
        self.blocks.iter().flatten().copied()
    }

    pub fn max_rate(&self) -> usize {
        self.flat().max().unwrap_or(1)
    }

    pub fn sum(&self) -> usize {
        self.flat().sum()
    }
}

/// Adaptive mode doubles within each block and starts every block at the
/// last rate of its predecessor; fixed(n) uses `n` everywhere.
pub fn dilation_schedule(
    num_blocks: usize,
    layers_per_block: usize,
    mode: DilationMode,
) -> DilationSchedule {
    assert!(num_blocks >= 1 && layers_per_block >= 1);
    let blocks = match mode {
        DilationMode::Fixed(n) => vec![vec![n; layers_per_block]; num_blocks],
        DilationMode::Adaptive => {
            let mut blocks = Vec::with_capacity(num_blocks);
            let mut start = 1usize;
            for _ in 0..num_blocks {
                let mut rates = Vec::with_capacity(layers_per_block);
                let mut d = start;
                for _ in 0..layers_per_block {
                    rates.push(d);
                    d *= 2;
                }
                start = *rates.last().unwrap();
                blocks.push(rates);
            }
            blocks
        }
    };
    DilationSchedule { blocks }
}

/// Receptive field of the downstream path: 1 + (k - 1) * sum of dilations.
pub fn receptive_field(schedule: &DilationSchedule, kernel: usize) -> usize {
    1 + (kernel - 1) * schedule.sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adaptive_default_reaches_4096() {
        let s = dilation_schedule(6, 3, DilationMode::Adaptive);
        let expected: Vec<Vec<usize>> = vec![
            vec![1, 2, 4],
            vec![4, 8, 16],
            vec![16, 32, 64],
            vec![64, 128, 256],
            vec![256, 512, 1024],
            vec![1024, 2048, 4096],
        ];
        assert_eq!(s.blocks(), expected.as_slice());
        assert_eq!(s.max_rate(), 4096);
    }

    #[test]
    fn fixed_mode_is_constant() {
        let s = dilation_schedule(4, 2, DilationMode::Fixed(1));
        assert!(s.flat().all(|d| d == 1));
    }

    #[test]
    fn single_layer_adaptive() {
        let s = dilation_schedule(1, 1, DilationMode::Adaptive);
        assert_eq!(s.blocks(), &[vec![1]]);
    }

    #[test]
    fn receptive_fields() {
        let single = dilation_schedule(1, 1, DilationMode::Fixed(1));
        assert_eq!(receptive_field(&single, 15), 15);
        let default = dilation_schedule(6, 3, DilationMode::Adaptive);
        assert_eq!(default.sum(), 9555);
        assert_eq!(receptive_field(&default, 15), 133_771);
        let fixed = dilation_schedule(6, 3, DilationMode::Fixed(512));
        assert_eq!(receptive_field(&fixed, 15), 129_025);
    }
}
