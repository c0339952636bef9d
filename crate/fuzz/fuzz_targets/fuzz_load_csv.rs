#![no_main]

use libfuzzer_sys::fuzz_target;
use qknn::dataset::{load_csv_from_reader, LabelColumn};

fuzz_target!(|data: &[u8]| {
    // First byte selects the loader mode, the rest is the CSV body.
    let Some((&mode, body)) = data.split_first() else {
        return;
    };
    let has_header = mode & 1 == 0;
    let label_column = if mode & 2 == 0 {
        LabelColumn::Last
    } else {
        LabelColumn::Index((mode >> 2) as usize)
    };
    if let Ok(ds) = load_csv_from_reader(body, "fuzz", label_column, has_header) {
        assert_eq!(ds.labels().len(), ds.instances().len());
        let width = ds.instances().first().map_or(0, Vec::len);
        assert!(ds.instances().iter().all(|row| row.len() == width));
        assert!(ds
            .instances()
            .iter()
            .flatten()
            .all(|value| value.is_finite()));
    }
});
