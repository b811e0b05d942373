//! Static C fragments from the `templates/` tree and `{KEY}` substitution.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("missing template binding {0}")]
    MissingBinding(String),
    #[error("unknown template fragment {0}")]
    UnknownFragment(String),
}

impl TemplateError {
    /// The missing key or unknown fragment id.
    pub fn key(&self) -> &str {
        match self {
            TemplateError::MissingBinding(k) | TemplateError::UnknownFragment(k) => k,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TemplateFragment {
    pub id: &'static str,
    pub content: &'static str,
}

macro_rules! fragment {
    ($id:literal, $path:literal) => {
        TemplateFragment {
            id: $id,
            content: include_str!(concat!("../../templates/", $path)),
        }
    };
}

pub const FRAGMENTS: &[TemplateFragment] = &[
    fragment!("runtime", "runtime.h.tmpl"),
    fragment!("program", "program.c.tmpl"),
    fragment!("driver_sequential", "driver_sequential.c.tmpl"),
    fragment!("driver_pool", "driver_pool.c.tmpl"),
    fragment!("makefile", "Makefile.tmpl"),
    fragment!("load_level", "kernels/load_level.c.tmpl"),
    fragment!("load_index", "kernels/load_index.c.tmpl"),
    fragment!("load_position", "kernels/load_position.c.tmpl"),
    fragment!("batch_bind", "kernels/batch_bind.c.tmpl"),
    fragment!("permute_stream", "kernels/permute_stream.c.tmpl"),
    fragment!("permute_single", "kernels/permute_single.c.tmpl"),
    fragment!("fused_bind_bundle", "kernels/fused_bind_bundle.c.tmpl"),
    fragment!("fused_ngram", "kernels/fused_ngram.c.tmpl"),
    fragment!("multibundle_stream", "kernels/multibundle_stream.c.tmpl"),
    fragment!("multibundle_materialized", "kernels/multibundle_materialized.c.tmpl"),
    fragment!("bind", "kernels/bind.c.tmpl"),
    fragment!("bundle", "kernels/bundle.c.tmpl"),
];

pub fn fragment(id: &str) -> Result<&'static TemplateFragment, TemplateError> {
    FRAGMENTS
        .iter()
        .find(|f| f.id == id)
        .ok_or_else(|| TemplateError::UnknownFragment(id.to_string()))
}

/// Placeholder spans in `text`: `{` + `[A-Z][A-Z0-9_]*` + `}`.
fn scan(text: &str) -> impl Iterator<Item = (usize, usize, &str)> {
    let bytes = text.as_bytes();
    let mut i = 0;
    std::iter::from_fn(move || {
        while i < bytes.len() {
            if bytes[i] == b'{' && bytes.get(i + 1).is_some_and(u8::is_ascii_uppercase) {
                let mut j = i + 1;
                while j < bytes.len() && (bytes[j].is_ascii_uppercase() || bytes[j].is_ascii_digit() || bytes[j] == b'_') {
                    j += 1;
                }
                if bytes.get(j) == Some(&b'}') {
                    let start = i;
                    i = j + 1;
                    return Some((start, j + 1, &text[start + 1..j]));
                }
            }
            i += 1;
        }
        None
    })
}

impl TemplateFragment {
    pub fn placeholders(&self) -> BTreeSet<&'static str> {
        scan(self.content).map(|(_, _, k)| k).collect()
    }
}

pub type Bindings = HashMap<&'static str, String>;

/// Replaces every placeholder of `fragment` with its binding. Bindings for
/// keys the fragment does not use are ignored.
pub fn instantiate(fragment: &TemplateFragment, bindings: &Bindings) -> Result<String, TemplateError> {
    let text = fragment.content;
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for (start, end, key) in scan(text) {
        let value = bindings
            .get(key)
            .ok_or_else(|| TemplateError::MissingBinding(key.to_string()))?;
        out.push_str(&text[last..start]);
        out.push_str(value);
        last = end;
    }
    out.push_str(&text[last..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bind(pairs: &[(&'static str, &str)]) -> Bindings {
        pairs.iter().map(|(k, v)| (*k, v.to_string())).collect()
    }

    #[test]
    fn fused_kernel_loops_over_batches() {
        let f = fragment("fused_bind_bundle").unwrap();
        let text = instantiate(f, &bind(&[("ID", "2"), ("A", "0"), ("B", "1"), ("LANES", "32"), ("NUM_BATCH", "320")])).unwrap();
        assert!(text.contains("for (i = 0; i < 320; i++)"));
        assert!(text.contains("acc + i * 32"));
        assert!(scan(&text).next().is_none());
    }

    #[test]
    fn no_placeholders_is_identity() {
        let f = TemplateFragment {
            id: "plain",
            content: "int main(void) { return 0; }\n",
        };
        assert!(f.placeholders().is_empty());
        assert_eq!(instantiate(&f, &Bindings::new()).unwrap(), f.content);
    }

    #[test]
    fn missing_binding_names_key() {
        let f = fragment("program").unwrap();
        let mut b: Bindings = f.placeholders().into_iter().map(|k| (k, String::new())).collect();
        b.remove("SEED");
        let err = instantiate(f, &b).unwrap_err();
        assert_eq!(err, TemplateError::MissingBinding("SEED".into()));
        assert_eq!(err.key(), "SEED");
    }

    #[test]
    fn c_braces_are_not_placeholders() {
        let f = TemplateFragment {
            id: "c",
            content: "{ int a[2] = {0}; {x} {Ab} {A-} }",
        };
        assert!(f.placeholders().is_empty());
    }

    #[test]
    fn fragment_ids_unique_and_known() {
        let ids: BTreeSet<_> = FRAGMENTS.iter().map(|f| f.id).collect();
        assert_eq!(ids.len(), FRAGMENTS.len());
        assert!(fragment("nope").is_err());
    }
}
