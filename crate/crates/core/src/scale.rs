use serde::{Deserialize, Serialize};

/// Item domain. Each domain carries its own canonical rating scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Movie,
    Book,
}

impl Domain {
    pub fn scale(self) -> RatingScale {
        match self {
            Domain::Movie => RatingScale::MOVIE,
            Domain::Book => RatingScale::BOOK,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Movie => "movie",
            Domain::Book => "book",
        }
    }
}

/// Inclusive integer rating range on the canonical scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RatingScale {
    pub min: u8,
    pub max: u8,
}

impl RatingScale {
    pub const MOVIE: RatingScale = RatingScale { min: 1, max: 10 };
    pub const BOOK: RatingScale = RatingScale { min: 1, max: 5 };

    pub fn contains(&self, rating: u8) -> bool {
        (self.min..=self.max).contains(&rating)
    }

    pub fn contains_real(&self, value: f64) -> bool {
        value.is_finite() && value >= f64::from(self.min) && value <= f64::from(self.max)
    }

    pub fn clamp(&self, value: i32) -> u8 {
        value.clamp(i32::from(self.min), i32::from(self.max)) as u8
    }

    /// `max - min`, the denominator used when comparing averages.
    pub fn span(&self) -> f64 {
        f64::from(self.max - self.min)
    }

    pub fn len(&self) -> usize {
        usize::from(self.max - self.min) + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> impl Iterator<Item = u8> {
        self.min..=self.max
    }
}
