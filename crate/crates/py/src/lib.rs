use pyo3::prelude::*;

#[pymodule]
fn annealab(_m: &Bound<'_, PyModule>) -> PyResult<()> {
    Ok(())
}
