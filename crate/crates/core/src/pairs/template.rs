use crate::error::{Error, Result};

/// Which metadata fields are verbalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairMode {
    Genre,
    TitleGenre,
}

impl PairMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            PairMode::Genre => "genre",
            PairMode::TitleGenre => "title+genre",
        }
    }
}

impl std::str::FromStr for PairMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "genre" => Ok(PairMode::Genre),
            "title+genre" | "title_genre" => Ok(PairMode::TitleGenre),
            other => Err(Error::Config(format!("unknown pair mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DomainKind {
    Movie,
    Book,
}

impl DomainKind {
    fn work_noun(&self) -> &'static str {
        match self {
            DomainKind::Movie => "film",
            DomainKind::Book => "book",
        }
    }

    fn title_noun(&self) -> &'static str {
        match self {
            DomainKind::Movie => "movie",
            DomainKind::Book => "book",
        }
    }
}

impl std::str::FromStr for DomainKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "movie" | "film" => Ok(DomainKind::Movie),
            "book" => Ok(DomainKind::Book),
            other => Err(Error::Config(format!("unknown domain `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContentMetadata {
    pub content_id: usize,
    pub title: String,
    pub year: Option<i32>,
    pub genres: Vec<String>,
    pub synopsis: Option<String>,
}

/// Verbalizes metadata into the sentence used for similarity ranking.
///
/// `genre`: `The genre of the film is Action.` /
/// `The genres of the film are Action, Comedy.`
///
/// `title+genre` prefixes `A movie title is Heat (1995). `; the year
/// parenthetical is omitted when the year is unknown.
pub fn render_template(meta: &ContentMetadata, mode: PairMode, domain: DomainKind) -> Result<String> {
    let genres: Vec<&str> = meta.genres.iter().map(|g| g.trim()).filter(|g| !g.is_empty()).collect();
    if genres.is_empty() {
        return Err(Error::Data(format!("content {} has no genre", meta.content_id)));
    }
    let genre_sentence = if genres.len() == 1 {
        format!("The genre of the {} is {}.", domain.work_noun(), genres[0])
    } else {
        format!("The genres of the {} are {}.", domain.work_noun(), genres.join(", "))
    };
    match mode {
        PairMode::Genre => Ok(genre_sentence),
        PairMode::TitleGenre => {
            let title = meta.title.trim();
            if title.is_empty() {
                return Err(Error::Data(format!("content {} has no title", meta.content_id)));
            }
            let year = meta.year.map(|y| format!(" ({y})")).unwrap_or_default();
            Ok(format!(
                "A {} title is {title}{year}. {genre_sentence}",
                domain.title_noun()
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta(title: &str, year: Option<i32>, genres: &[&str]) -> ContentMetadata {
        ContentMetadata {
            content_id: 1,
            title: title.into(),
            year,
            genres: genres.iter().map(|g| g.to_string()).collect(),
            synopsis: None,
        }
    }

    #[test]
    fn singular_genre_movie() {
        let s = render_template(&meta("", None, &["Action"]), PairMode::Genre, DomainKind::Movie).unwrap();
        assert_eq!(s, "The genre of the film is Action.");
    }

    #[test]
    fn title_and_plural_genres() {
        let s = render_template(
            &meta("Heat", Some(1995), &["Action", "Comedy"]),
            PairMode::TitleGenre,
            DomainKind::Movie,
        )
        .unwrap();
        assert_eq!(
            s,
            "A movie title is Heat (1995). The genres of the film are Action, Comedy."
        );
    }

    #[test]
    fn singular_genre_book() {
        let s = render_template(&meta("", None, &["Fantasy"]), PairMode::Genre, DomainKind::Book).unwrap();
        assert_eq!(s, "The genre of the book is Fantasy.");
    }

    #[test]
    fn book_title_without_year() {
        let s = render_template(
            &meta("Dune", None, &["Science Fiction"]),
            PairMode::TitleGenre,
            DomainKind::Book,
        )
        .unwrap();
        assert_eq!(s, "A book title is Dune. The genre of the book is Science Fiction.");
    }

    #[test]
    fn missing_fields() {
        assert!(render_template(&meta("Heat", None, &[]), PairMode::Genre, DomainKind::Movie).is_err());
        assert!(render_template(&meta(" ", None, &["Drama"]), PairMode::TitleGenre, DomainKind::Movie).is_err());
        // title is irrelevant in genre mode
        assert!(render_template(&meta("", None, &["Drama"]), PairMode::Genre, DomainKind::Movie).is_ok());
    }
}
