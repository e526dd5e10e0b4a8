#pragma once

// Frozen prompt fixtures shared by the unit tests and the acceptance suite.
// The strings below are the exact expected renderings; any formatting change
// in the prompt builder must show up here as a conscious golden update.

#include <string>

#include "ratebench/dataset.hpp"

namespace testutil {

inline ratebench::data::Catalog golden_movie_catalog() {
  ratebench::data::Catalog catalog;
  catalog.add({"m1", "The Long Voyage (1998)", {"Drama", "War"}, false});
  catalog.add({"m2", "Paper Moon Rising (2001)", {"Comedy"}, false});
  catalog.add({"m3", "Silent Hallway (1999)", {}, false});
  return catalog;
}

/// Target example: three-step history ending in an item the catalog does not
/// know ("m404"), so the raw-id fallback stays covered.
inline ratebench::data::RatingExample golden_movie_example() {
  ratebench::data::RatingExample e;
  e.user_id = "u9";
  e.item_id = "m2";
  e.label = 4.0;
  e.timestamp = 978400000;
  e.history = {{"m1", 4.0, 978100000}, {"m3", 2.5, 978200000}, {"m404", 5.0, 978300000}};
  return e;
}

inline ratebench::data::RatingExample golden_movie_shot() {
  ratebench::data::RatingExample e;
  e.user_id = "u2";
  e.item_id = "m1";
  e.label = 3.0;
  e.timestamp = 978000000;
  e.history = {{"m2", 1.0, 977900000}};
  return e;
}

inline ratebench::data::Catalog golden_book_catalog() {
  ratebench::data::Catalog catalog;
  catalog.add({"b1", "A River of Glass", {"Hollow Press"}, false});
  return catalog;
}

inline ratebench::data::RatingExample golden_book_example() {
  ratebench::data::RatingExample e;
  e.user_id = "u1";
  e.item_id = "b1";
  e.label = 5.0;
  e.timestamp = 1400000000;
  return e;
}

inline constexpr const char* kMoviesZeroShot =
    R"GP(You are a movie recommender system. Predict the rating the user will give to the candidate movie. The rating scale goes from 1 to 5.
Give a single number as rating without explanation. Do not give reasoning.

The user rated the following movies, oldest to newest:
The Long Voyage (1998) (Drama, War): 4
Silent Hallway (1999): 2.5
m404: 5
How would the user rate "Paper Moon Rising (2001)" (Comedy)?
Answer:)GP";

inline constexpr const char* kMoviesOneShot =
    R"GP(You are a movie recommender system. Predict the rating the user will give to the candidate movie. The rating scale goes from 1 to 5.
Give a single number as rating without explanation. Do not give reasoning.

Here is an example:
The user rated the following movies, oldest to newest:
Paper Moon Rising (2001) (Comedy): 1
How would the user rate "The Long Voyage (1998)" (Drama, War)?
Answer: 3

The user rated the following movies, oldest to newest:
The Long Voyage (1998) (Drama, War): 4
Silent Hallway (1999): 2.5
m404: 5
How would the user rate "Paper Moon Rising (2001)" (Comedy)?
Answer:)GP";

inline constexpr const char* kBooksZeroShot =
    R"GP(You are a book recommender system. Predict the rating the user will give to the candidate book. The rating scale goes from 1 to 5.
Give a single number as rating without explanation. Do not give reasoning.

The user rated the following books, oldest to newest:
The user has no earlier ratings.
How would the user rate "A River of Glass" (Hollow Press)?
Answer:)GP";

}  // namespace testutil
