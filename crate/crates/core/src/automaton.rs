//! Two-action Tsetlin Automaton, scalar reference form.
//!
//! States are numbered `0..2N`. The lower half `0..N` selects
//! [`Action::Exclude`], the upper half `N..2N` selects [`Action::Include`].
//! With `2N = 2^b` the action is the most significant bit of the b-bit
//! state value, which is what the packed engine relies on.

use rand::Rng;

/// The two actions available to an automaton guarding one literal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Exclude,
    Include,
}

/// Environment response delivered to an automaton.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Event {
    Reward,
    Penalty,
    Inaction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TaState {
    value: u16,
    half: u16,
}

impl TaState {
    /// Creates a state. Panics if `half == 0` or `value >= 2 * half`.
    pub fn new(value: u16, half: u16) -> Self {
        assert!(half >= 1, "an automaton needs at least one state per action");
        assert!(
            u32::from(value) < 2 * u32::from(half),
            "state {value} out of range for {half} states per action"
        );
        TaState { value, half }
    }

    /// Start-up state: uniformly `N-1` or `N`, i.e. on the action boundary.
    pub fn boundary<R: Rng + ?Sized>(half: u16, rng: &mut R) -> Self {
        let value = if rng.random::<bool>() { half } else { half - 1 };
        TaState::new(value, half)
    }

    #[inline]
    pub fn value(self) -> u16 {
        self.value
    }

    #[inline]
    pub fn half_range(self) -> u16 {
        self.half
    }

    #[inline]
    fn max(self) -> u16 {
        // 2N - 1 fits in u16 only when N <= 32768
        ((2 * u32::from(self.half)) - 1) as u16
    }

    #[inline]
    pub fn action(self) -> Action {
        if self.value < self.half {
            Action::Exclude
        } else {
            Action::Include
        }
    }

    /// Transition function: reward deepens the current action, penalty moves
    /// toward (and across) the boundary, inaction leaves the state alone.
    #[inline]
    pub fn apply(self, event: Event) -> Self {
        let value = match (event, self.action()) {
            (Event::Inaction, _) => self.value,
            (Event::Reward, Action::Exclude) => self.value.saturating_sub(1),
            (Event::Reward, Action::Include) => (self.value + 1).min(self.max()),
            (Event::Penalty, Action::Exclude) => self.value + 1,
            (Event::Penalty, Action::Include) => self.value - 1,
        };
        TaState { value, ..self }
    }
}
