//! Fixtures shared by the benchmarks.

use hvloss_core::data::{downsample, synthetic_digits, SplitSizes};
use hvloss_core::net::Batch;
use hvloss_core::optim::plan_epoch;
use hvloss_core::Dataset;

/// Desk-scale data: `train_rows` training images of 14x14 pixels.
pub fn desk_dataset(train_rows: usize) -> Dataset {
    let full = synthetic_digits(SplitSizes::new(train_rows, 10, 10), 28 * 28, 2024)
        .expect("synthetic data");
    downsample(&full, full.sizes(), 2).expect("downsampled")
}

/// One minibatch of `rows` clean/corrupted pairs at `p = 0.1`.
pub fn desk_batch(rows: usize) -> Batch {
    let data = desk_dataset(rows);
    let plan = plan_epoch(data.train.view(), 0, 0.1, 0).expect("plan");
    Batch::new(data.train, plan.corrupted).expect("batch")
}
