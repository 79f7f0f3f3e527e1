//! Links the distribution's OpenBLAS shared library (which bundles LAPACK)
//! rather than compiling OpenBLAS from source, so no Fortran toolchain is
//! needed at build time. Resolution goes through pkg-config when available
//! and falls back to the default linker search path.

fn main() {
    if pkg_config::Config::new()
        .statik(false)
        .probe("openblas")
        .is_ok()
    {
        return;
    }
    println!("cargo:rustc-link-lib=dylib=openblas");
}
