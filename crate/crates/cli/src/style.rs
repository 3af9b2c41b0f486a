use std::io::IsTerminal;

/// Diagnostic styling chosen by `VIRTINT_COLOR`: `always`, `never`, or
/// `auto` (the default, color only when stderr is a terminal).
pub struct Style {
    color: bool,
}

impl Style {
    pub fn from_env() -> Self {
        let color = match std::env::var("VIRTINT_COLOR").as_deref() {
            Ok("always") => true,
            Ok("never") => false,
            _ => std::io::stderr().is_terminal(),
        };
        Style { color }
    }

    pub fn error(&self, text: &str) -> String {
        if self.color {
            format!("\x1b[1;31m{text}\x1b[0m")
        } else {
            text.to_string()
        }
    }
}
