//! Menu items priced from their ingredient lists, and same-category
//! lower-carbon recommendations.
//!
//! Footprints are per listed recipe (one serving) and are recomputed from
//! the registry on every query, so they never go stale across factor
//! updates.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::factor::{Category, FactorError, FactorRegistry, Unit};
use crate::ranking::{cheaper_alternatives, Rankable};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MenuError {
    #[error("menu item {0:?} not found")]
    ItemNotFound(String),
    #[error("duplicate menu item id {0:?}")]
    DuplicateItemId(String),
    #[error("menu item {0:?} has no ingredients")]
    EmptyRecipe(String),
    #[error("ingredient {0:?} must have a positive, finite weight in grams")]
    InvalidQuantity(String),
    #[error("{0} must not be empty")]
    MissingField(&'static str),
    #[error(transparent)]
    Factor(#[from] FactorError),
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IngredientQuantity {
    pub ingredient: String,
    pub grams: f64,
}

impl IngredientQuantity {
    pub fn new(ingredient: &str, grams: f64) -> Result<Self, MenuError> {
        let ingredient = ingredient.trim().to_lowercase();
        if ingredient.is_empty() {
            return Err(MenuError::MissingField("ingredient"));
        }
        if !grams.is_finite() || grams <= 0.0 {
            return Err(MenuError::InvalidQuantity(ingredient));
        }
        Ok(IngredientQuantity { ingredient, grams })
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MenuItem {
    pub id: String,
    pub name: String,
    pub category: String,
    pub ingredients: Vec<IngredientQuantity>,
}

impl MenuItem {
    pub fn new(
        id: &str,
        name: &str,
        category: &str,
        ingredients: Vec<IngredientQuantity>,
    ) -> Result<Self, MenuError> {
        let id = id.trim();
        if id.is_empty() {
            return Err(MenuError::MissingField("item id"));
        }
        let category = category.trim().to_lowercase();
        if category.is_empty() {
            return Err(MenuError::MissingField("item category"));
        }
        if ingredients.is_empty() {
            return Err(MenuError::EmptyRecipe(id.to_string()));
        }
        let ingredients = ingredients
            .into_iter()
            .map(|i| IngredientQuantity::new(&i.ingredient, i.grams))
            .collect::<Result<_, _>>()?;
        Ok(MenuItem {
            id: id.to_string(),
            name: name.trim().to_string(),
            category,
            ingredients,
        })
    }

    pub fn footprint_kg(&self, registry: &FactorRegistry) -> Result<f64, FactorError> {
        recipe_footprint(&self.ingredients, registry)
    }

    pub fn scored(&self, registry: &FactorRegistry) -> Result<ScoredMenuItem, FactorError> {
        Ok(ScoredMenuItem {
            id: self.id.clone(),
            name: self.name.clone(),
            category: self.category.clone(),
            footprint_kg: self.footprint_kg(registry)?,
        })
    }
}

/// A menu item together with its footprint under a particular registry.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScoredMenuItem {
    pub id: String,
    pub name: String,
    pub category: String,
    pub footprint_kg: f64,
}

impl Rankable for ScoredMenuItem {
    type Key = str;

    fn category(&self) -> &str {
        &self.category
    }

    fn footprint_kg(&self) -> f64 {
        self.footprint_kg
    }

    fn tie_key(&self) -> &str {
        &self.id
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Menu {
    pub restaurant_id: String,
    pub items: Vec<MenuItem>,
}

impl Menu {
    /// Validates every item and rejects repeated item ids.
    pub fn new(restaurant_id: &str, items: Vec<MenuItem>) -> Result<Self, MenuError> {
        let restaurant_id = restaurant_id.trim();
        if restaurant_id.is_empty() {
            return Err(MenuError::MissingField("restaurant_id"));
        }
        let mut seen = BTreeSet::new();
        let mut checked = Vec::with_capacity(items.len());
        for item in items {
            let item = MenuItem::new(&item.id, &item.name, &item.category, item.ingredients)?;
            if !seen.insert(item.id.clone()) {
                return Err(MenuError::DuplicateItemId(item.id));
            }
            checked.push(item);
        }
        Ok(Menu {
            restaurant_id: restaurant_id.to_string(),
            items: checked,
        })
    }

    pub fn item(&self, id: &str) -> Result<&MenuItem, MenuError> {
        self.items
            .iter()
            .find(|i| i.id == id)
            .ok_or_else(|| MenuError::ItemNotFound(id.to_string()))
    }

    pub fn scored(&self, registry: &FactorRegistry) -> Result<Vec<ScoredMenuItem>, FactorError> {
        self.items.iter().map(|i| i.scored(registry)).collect()
    }
}

/// Sum of `grams / 1000 * factor` over the ingredients.
///
/// Terms are added in ascending (ingredient, grams) order so that the result
/// is bit-for-bit independent of how the list was ordered.
pub fn recipe_footprint(
    ingredients: &[IngredientQuantity],
    registry: &FactorRegistry,
) -> Result<f64, FactorError> {
    let mut ordered: Vec<&IngredientQuantity> = ingredients.iter().collect();
    ordered.sort_by(|a, b| {
        a.ingredient
            .cmp(&b.ingredient)
            .then_with(|| a.grams.total_cmp(&b.grams))
    });
    let mut total = 0.0;
    for q in ordered {
        let factor = registry
            .lookup(Category::FoodIngredient, &q.ingredient)?
            .expect_unit(Unit::Kg)?;
        total += q.grams / 1000.0 * factor.kg_co2e_per_unit;
    }
    Ok(total)
}

/// Up to `limit` items from the chosen item's category with strictly lower
/// footprint, ascending, ties broken by item id.
pub fn recommend_menu(
    menu: &Menu,
    chosen: &str,
    registry: &FactorRegistry,
    limit: usize,
) -> Result<Vec<ScoredMenuItem>, MenuError> {
    let chosen = menu.item(chosen)?.scored(registry)?;
    let peers = menu
        .items
        .iter()
        .filter(|i| i.category == chosen.category)
        .map(|i| i.scored(registry))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(cheaper_alternatives(&peers, &chosen, limit)
        .into_iter()
        .cloned()
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::EmissionFactor;
    use alloc::format;
    use alloc::vec;
    use proptest::prelude::*;

    fn registry() -> FactorRegistry {
        FactorRegistry::from_factors(
            [
                ("beef", 27.0),
                ("rice", 2.7),
                ("lentils", 0.9),
                ("cheese", 13.5),
                ("tomato", 1.4),
            ]
            .into_iter()
            .map(|(v, f)| {
                EmissionFactor::new(Category::FoodIngredient, v, Unit::Kg, f, "t").unwrap()
            }),
        )
        .unwrap()
    }

    fn q(name: &str, g: f64) -> IngredientQuantity {
        IngredientQuantity::new(name, g).unwrap()
    }

    #[test]
    fn recipe_examples() {
        let r = registry();
        assert_eq!(recipe_footprint(&[], &r).unwrap(), 0.0);
        assert!((recipe_footprint(&[q("beef", 150.0)], &r).unwrap() - 4.05).abs() < 1e-12);
        let two = recipe_footprint(&[q("beef", 150.0), q("rice", 100.0)], &r).unwrap();
        assert!((two - 4.32).abs() <= 1e-12, "{two}");
        assert!(matches!(
            recipe_footprint(&[q("unobtainium", 1.0)], &r),
            Err(FactorError::FactorNotFound { .. })
        ));
    }

    #[test]
    fn ingredient_unit_must_be_kg() {
        let mut r = registry();
        r.upsert(
            EmissionFactor::new(Category::FoodIngredient, "egg", Unit::Item, 0.2, "t").unwrap(),
        )
        .unwrap();
        assert!(matches!(
            recipe_footprint(&[q("egg", 50.0)], &r),
            Err(FactorError::UnitMismatch { .. })
        ));
    }

    #[test]
    fn footprint_tracks_registry_updates() {
        let mut r = registry();
        let item = MenuItem::new("m1", "Burger", "main", vec![q("beef", 100.0)]).unwrap();
        assert!((item.footprint_kg(&r).unwrap() - 2.7).abs() < 1e-12);
        r.upsert(
            EmissionFactor::new(Category::FoodIngredient, "beef", Unit::Kg, 30.0, "t").unwrap(),
        )
        .unwrap();
        assert!((item.footprint_kg(&r).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn item_validation() {
        assert!(matches!(
            IngredientQuantity::new("beef", 0.0),
            Err(MenuError::InvalidQuantity(_))
        ));
        assert!(matches!(
            MenuItem::new("a", "A", "main", vec![]),
            Err(MenuError::EmptyRecipe(_))
        ));
        let dup = vec![
            MenuItem::new("a", "A", "main", vec![q("rice", 1.0)]).unwrap(),
            MenuItem::new("a", "B", "main", vec![q("rice", 2.0)]).unwrap(),
        ];
        assert_eq!(
            Menu::new("r", dup),
            Err(MenuError::DuplicateItemId("a".into()))
        );
    }

    fn three_item_menu() -> Menu {
        Menu::new(
            "r1",
            vec![
                MenuItem::new("low", "Dal", "main", vec![q("lentils", 1000.0 / 0.9)]).unwrap(),
                MenuItem::new("high", "Steak", "main", vec![q("beef", 3000.0 / 27.0)]).unwrap(),
                MenuItem::new("mid", "Risotto", "main", vec![q("rice", 2000.0 / 2.7)]).unwrap(),
                MenuItem::new("cake", "Cake", "dessert", vec![q("cheese", 10.0)]).unwrap(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn recommend_examples() {
        let r = registry();
        let m = three_item_menu();
        let got: Vec<String> = recommend_menu(&m, "high", &r, 4)
            .unwrap()
            .into_iter()
            .map(|i| i.id)
            .collect();
        assert_eq!(got, ["low", "mid"]);
        assert!(recommend_menu(&m, "low", &r, 4).unwrap().is_empty());
        assert!(recommend_menu(&m, "cake", &r, 4).unwrap().is_empty());
        assert_eq!(
            recommend_menu(&m, "nope", &r, 4),
            Err(MenuError::ItemNotFound("nope".into()))
        );
    }

    proptest! {
        #[test]
        fn recipe_is_linear(grams in proptest::collection::vec(1.0f64..500.0, 1..5)) {
            let r = registry();
            let names = ["beef", "rice", "lentils", "cheese", "tomato"];
            let base: Vec<_> = grams.iter().enumerate().map(|(i, g)| q(names[i], *g)).collect();
            let doubled: Vec<_> = base.iter().map(|x| q(&x.ingredient, x.grams * 2.0)).collect();
            let a = recipe_footprint(&base, &r).unwrap();
            let b = recipe_footprint(&doubled, &r).unwrap();
            prop_assert!((b - 2.0 * a).abs() <= 1e-12 * b.abs());
        }

        #[test]
        fn recipe_is_permutation_invariant(
            items in proptest::collection::vec((0usize..5, 1.0f64..500.0), 1..8),
            seed in any::<u64>(),
        ) {
            let r = registry();
            let names = ["beef", "rice", "lentils", "cheese", "tomato"];
            let list: Vec<_> = items.iter().map(|(n, g)| q(names[*n], *g)).collect();
            let mut shuffled = list.clone();
            // Deterministic Fisher-Yates driven by the seed.
            let mut s = seed | 1;
            for i in (1..shuffled.len()).rev() {
                s ^= s << 13; s ^= s >> 7; s ^= s << 17;
                shuffled.swap(i, (s % (i as u64 + 1)) as usize);
            }
            let a = recipe_footprint(&list, &r).unwrap();
            let b = recipe_footprint(&shuffled, &r).unwrap();
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }

        #[test]
        fn recommend_matches_filter_sort(
            specs in proptest::collection::vec((0u8..3, 0usize..5, 1u8..6), 1..15),
            pick in 0usize..15,
        ) {
            let r = registry();
            let names = ["beef", "rice", "lentils", "cheese", "tomato"];
            let items: Vec<MenuItem> = specs.iter().enumerate().map(|(i, (c, n, g))| {
                MenuItem::new(&format!("i{i:02}"), "x", &format!("c{c}"), vec![q(names[*n], f64::from(*g) * 50.0)]).unwrap()
            }).collect();
            let menu = Menu::new("r", items).unwrap();
            let chosen = &menu.items[pick % menu.items.len()];
            let got = recommend_menu(&menu, &chosen.id, &r, 4).unwrap();

            let chosen_kg = chosen.footprint_kg(&r).unwrap();
            let mut oracle: Vec<(f64, String)> = menu.items.iter()
                .filter(|i| i.category == chosen.category)
                .map(|i| (i.footprint_kg(&r).unwrap(), i.id.clone()))
                .filter(|(kg, _)| *kg < chosen_kg)
                .collect();
            oracle.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            oracle.truncate(4);
            let got: Vec<(f64, String)> = got.into_iter().map(|i| (i.footprint_kg, i.id)).collect();
            prop_assert_eq!(got, oracle);
        }
    }
}
