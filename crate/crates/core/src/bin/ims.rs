fn main() -> std::process::ExitCode {
    // exit quietly when the reader of a pipe goes away (`ims ... | head`)
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    ims_core::cli::main()
}
