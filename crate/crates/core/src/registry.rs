use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Name-keyed table of interchangeable strategies.
#[derive(Debug)]
pub struct Registry<T> {
    what: &'static str,
    entries: BTreeMap<String, T>,
}

impl<T> Registry<T> {
    pub fn new(what: &'static str) -> Self {
        Self {
            what,
            entries: BTreeMap::new(),
        }
    }

    /// Registers `item` under `name`, replacing any previous entry.
    pub fn register(&mut self, name: impl Into<String>, item: T) -> &mut Self {
        self.entries.insert(name.into(), item);
        self
    }

    pub fn get(&self, name: &str) -> Result<&T> {
        self.entries.get(name).ok_or_else(|| Error::UnknownStrategy {
            what: self.what,
            name: name.to_string(),
            available: self.names().join(", "),
        })
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.keys().map(String::as_str).collect()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_and_unknown_names() {
        let mut r: Registry<u8> = Registry::new("widget");
        r.register("b", 2).register("a", 1);
        assert_eq!(*r.get("a").unwrap(), 1);
        assert_eq!(r.names(), vec!["a", "b"]);
        let err = r.get("c").unwrap_err().to_string();
        assert!(err.contains("widget") && err.contains("a, b"), "{err}");
    }
}
