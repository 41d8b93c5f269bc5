fn main() {
    std::process::exit(hausdorff_grid::cli::run(std::env::args_os()));
}
