use std::sync::Arc;

use parking_lot::{Mutex, RwLock};

use super::tensor::AccessTensor;

/// Snapshot holder for a tensor.
///
/// Readers take an `Arc` to an immutable snapshot. Writers are serialized,
/// work on a private copy and publish it with a single pointer swap, so a
/// failed or half-done mutation is never visible.
#[derive(Debug, Default)]
pub struct TensorStore {
    current: RwLock<Arc<AccessTensor>>,
    writer: Mutex<()>,
}

impl TensorStore {
    pub fn new(t: AccessTensor) -> Self {
        Self { current: RwLock::new(Arc::new(t)), writer: Mutex::new(()) }
    }

    pub fn snapshot(&self) -> Arc<AccessTensor> {
        self.current.read().clone()
    }

    /// Applies `f` to a copy of the current snapshot and publishes the copy
    /// only if `f` succeeds.
    pub fn update<T, E>(&self, f: impl FnOnce(&mut AccessTensor) -> Result<T, E>) -> Result<T, E> {
        let _guard = self.writer.lock();
        let mut next = (*self.snapshot()).clone();
        let out = f(&mut next)?;
        *self.current.write() = Arc::new(next);
        Ok(out)
    }

    pub fn replace(&self, t: AccessTensor) {
        let _guard = self.writer.lock();
        *self.current.write() = Arc::new(t);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::act::{ActError, SubjectId};

    #[test]
    fn failed_update_is_invisible() {
        let store = TensorStore::new(AccessTensor::new());
        let before = store.snapshot();
        let res: Result<(), ActError> = store.update(|t| {
            t.create_subject(SubjectId::new("alice").unwrap())?;
            t.create_subject(SubjectId::new("alice").unwrap())
        });
        assert!(res.is_err());
        assert_eq!(*store.snapshot(), *before);
        assert!(!store.snapshot().has_subject("alice"));
    }

    #[test]
    fn old_snapshots_survive_updates() {
        let store = TensorStore::new(AccessTensor::new());
        let old = store.snapshot();
        store
            .update(|t| t.create_subject(SubjectId::new("bob").unwrap()))
            .unwrap();
        assert!(!old.has_subject("bob"));
        assert!(store.snapshot().has_subject("bob"));
    }
}
