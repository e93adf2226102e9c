use suber_core::prompting::PromptTemplates;
use suber_core::{
    Actor, Domain, EnvConfig, Gender, ItemRecord, Memory, RatingBias, ReleaseDate, SuberEnv,
    SyntheticRater, UserRecord,
};

pub const GENRES: [&str; 6] = ["action", "comedy", "drama", "horror", "romance", "family"];

pub fn user(id: u32, liked: &[&str], disliked: &[&str]) -> UserRecord {
    UserRecord {
        user_id: id,
        name: format!("User{id}"),
        age: 30,
        gender: if id.is_multiple_of(2) {
            Gender::F
        } else {
            Gender::M
        },
        description: "a tester.".into(),
        liked_genres: liked.iter().map(|g| g.to_string()).collect(),
        disliked_genres: disliked.iter().map(|g| g.to_string()).collect(),
        hobby: "chess".into(),
        job: "teacher".into(),
        rating_bias: RatingBias::None,
    }
}

pub fn movie(
    id: u32,
    genres: &[&str],
    actors: &[&str],
    director: Option<&str>,
    vote: f64,
) -> ItemRecord {
    ItemRecord {
        item_id: id,
        title: format!("Movie {id}"),
        overview: format!("The story of movie number {id}."),
        genres: genres.iter().map(|g| g.to_string()).collect(),
        actors: actors
            .iter()
            .map(|a| Actor {
                name: a.to_string(),
                gender: Gender::F,
            })
            .collect(),
        director: director.map(str::to_string),
        authors: vec![],
        release_date: ReleaseDate::parse("2001-05-17").unwrap(),
        vote_average: vote,
        domain: Domain::Movie,
    }
}

/// `n_users` users and `n_items` movies cycling through [`GENRES`].
pub fn catalog(n_users: u32, n_items: u32) -> Memory {
    let users = (0..n_users)
        .map(|u| {
            let g = GENRES.len() as u32;
            user(
                u,
                &[GENRES[(u % g) as usize]],
                &[GENRES[((u + 1) % g) as usize]],
            )
        })
        .collect();
    let items = (0..n_items)
        .map(|i| {
            let g = GENRES[i as usize % GENRES.len()];
            movie(i, &[g], &["Ann Lee"], Some("Sam Roe"), 5.0 + (i % 4) as f64)
        })
        .collect();
    Memory::new(users, items).unwrap()
}

pub fn env(memory: Memory, seed: u64) -> SuberEnv<SyntheticRater> {
    let config = EnvConfig {
        seed,
        ..Default::default()
    };
    SuberEnv::new(
        config,
        memory,
        PromptTemplates::builtin(Domain::Movie),
        None,
        SyntheticRater,
    )
    .unwrap()
}
