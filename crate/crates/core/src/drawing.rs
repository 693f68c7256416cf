//! The drawing document: layers, entities and parametric modules.
//!
//! A module owns the entities generated from its parameters. Owned
//! entities cannot be edited or deleted on their own; every module edit
//! goes through parameters, origin or scale followed by regeneration, so
//! the stored geometry always equals a fresh regeneration.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::entity::{sort_dedup_points, ElementId, Entity, EntityKind, Layer};
use crate::generate::{insert_grid_axes, regenerate, NotAGridModule};
use crate::geom::{Bounds, Point2};
use crate::params::{ModuleParams, Violation};

pub const FORMAT_VERSION: u32 = 1;
pub const DEFAULT_LAYER: &str = "0";

/// Drawing marks known out of the box.
pub const DRAWING_MARKS: [&str; 18] = [
    "ТХ", "ТК", "ГСН", "ГТ", "ГП", "АР", "КЖ", "КМ", "КД", "ОВ", "ВК", "НВК", "ТС", "ЭМ", "ЭО", "ЭН", "ЭС", "А",
];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DrawingError {
    #[error("unknown layer {0:?}")]
    UnknownLayer(String),
    #[error("layer {0:?} already exists")]
    DuplicateLayer(String),
    #[error("invalid layer name")]
    InvalidLayerName,
    #[error("invalid geometry: {0}")]
    InvalidGeometry(&'static str),
    #[error("invalid params: {}", join_violations(.0))]
    InvalidParams(Vec<Violation>),
    #[error("element {0} not found")]
    NotFound(ElementId),
    #[error("entity {entity} is owned by module {module}")]
    OwnedByModule { entity: ElementId, module: ElementId },
    #[error("invalid factor: stretch factor must be positive and finite")]
    InvalidFactor,
    #[error("element {0} is not a module")]
    NotAModule(ElementId),
    #[error(transparent)]
    NotAGridModule(#[from] NotAGridModule),
    #[error("module {0} is not a pipe route")]
    NotARouteModule(ElementId),
    #[error("unknown drawing mark {0:?}")]
    UnknownMark(String),
}

fn join_violations(v: &[Violation]) -> String {
    let mut out = String::new();
    for (i, violation) in v.iter().enumerate() {
        if i > 0 {
            out.push_str("; ");
        }
        out.push_str(&violation.to_string());
    }
    out
}

/// The drawing element jointly storing a parameter block and the ids of the
/// geometry generated from it.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ModuleElement {
    pub module_id: ElementId,
    pub params: ModuleParams,
    pub origin: Point2,
    pub scale: f64,
    /// Generated entities in generation order.
    pub owned_entity_ids: Vec<ElementId>,
}

impl ModuleElement {
    pub fn kind(&self) -> crate::params::GeneratorKind {
        self.params.kind()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Drawing {
    format_version: u32,
    next_id: u64,
    mark: String,
    layers: BTreeMap<String, Layer>,
    entities: BTreeMap<ElementId, Entity>,
    modules: BTreeMap<ElementId, ModuleElement>,
    // entity id -> owning module id; derived from `modules`
    owners: BTreeMap<ElementId, ElementId>,
}

impl Drawing {
    /// New drawing with the default layer, checking `mark` against
    /// [`DRAWING_MARKS`].
    pub fn new(mark: &str) -> Result<Self, DrawingError> {
        Self::with_marks(mark, &DRAWING_MARKS)
    }

    /// New drawing with the default layer, checking `mark` against a
    /// configured mark list.
    pub fn with_marks<S: AsRef<str>>(mark: &str, marks: &[S]) -> Result<Self, DrawingError> {
        if !marks.iter().any(|m| m.as_ref() == mark) {
            return Err(DrawingError::UnknownMark(mark.into()));
        }
        Ok(Self::unchecked(mark))
    }

    pub(crate) fn unchecked(mark: &str) -> Self {
        let mut layers = BTreeMap::new();
        layers.insert(
            DEFAULT_LAYER.to_string(),
            Layer {
                name: DEFAULT_LAYER.into(),
                visible: true,
            },
        );
        Self {
            format_version: FORMAT_VERSION,
            next_id: 1,
            mark: mark.into(),
            layers,
            entities: BTreeMap::new(),
            modules: BTreeMap::new(),
            owners: BTreeMap::new(),
        }
    }

    /// Reassembles a drawing from decoded parts, checking every invariant.
    pub(crate) fn from_parts(
        format_version: u32,
        next_id: u64,
        mark: String,
        layers: Vec<Layer>,
        entities: Vec<Entity>,
        modules: Vec<ModuleElement>,
    ) -> Result<Self, String> {
        let mut d = Self {
            format_version,
            next_id,
            mark,
            layers: layers.into_iter().map(|l| (l.name.clone(), l)).collect(),
            entities: entities.into_iter().map(|e| (e.id, e)).collect(),
            modules: modules.into_iter().map(|m| (m.module_id, m)).collect(),
            owners: BTreeMap::new(),
        };
        for m in d.modules.values() {
            for id in &m.owned_entity_ids {
                if d.owners.insert(*id, m.module_id).is_some() {
                    return Err(alloc::format!("entity {id} owned by more than one module"));
                }
            }
        }
        d.check_invariants()?;
        Ok(d)
    }

    pub fn format_version(&self) -> u32 {
        self.format_version
    }

    pub fn next_id(&self) -> u64 {
        self.next_id
    }

    pub fn mark(&self) -> &str {
        &self.mark
    }

    pub fn layers(&self) -> impl Iterator<Item = &Layer> {
        self.layers.values()
    }

    pub fn layer(&self, name: &str) -> Option<&Layer> {
        self.layers.get(name)
    }

    /// Entities in id order.
    pub fn entities(&self) -> impl Iterator<Item = &Entity> {
        self.entities.values()
    }

    pub fn entity(&self, id: ElementId) -> Option<&Entity> {
        self.entities.get(&id)
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    /// Modules in id order.
    pub fn modules(&self) -> impl Iterator<Item = &ModuleElement> {
        self.modules.values()
    }

    pub fn module(&self, id: ElementId) -> Option<&ModuleElement> {
        self.modules.get(&id)
    }

    pub fn module_count(&self) -> usize {
        self.modules.len()
    }

    /// Module owning entity `id`, if any.
    pub fn owner_of(&self, id: ElementId) -> Option<ElementId> {
        self.owners.get(&id).copied()
    }

    pub fn contains(&self, id: ElementId) -> bool {
        self.entities.contains_key(&id) || self.modules.contains_key(&id)
    }

    fn issue_id(&mut self) -> ElementId {
        let id = ElementId(self.next_id);
        self.next_id += 1;
        id
    }

    pub fn add_layer(&mut self, name: &str, visible: bool) -> Result<(), DrawingError> {
        if name.is_empty() {
            return Err(DrawingError::InvalidLayerName);
        }
        if self.layers.contains_key(name) {
            return Err(DrawingError::DuplicateLayer(name.into()));
        }
        self.layers.insert(
            name.into(),
            Layer {
                name: name.into(),
                visible,
            },
        );
        Ok(())
    }

    pub fn set_layer_visible(&mut self, name: &str, visible: bool) -> Result<(), DrawingError> {
        let layer = self
            .layers
            .get_mut(name)
            .ok_or_else(|| DrawingError::UnknownLayer(name.into()))?;
        layer.visible = visible;
        Ok(())
    }

    pub fn add_entity(&mut self, kind: EntityKind, layer: &str) -> Result<ElementId, DrawingError> {
        if !self.layers.contains_key(layer) {
            return Err(DrawingError::UnknownLayer(layer.into()));
        }
        kind.validate().map_err(DrawingError::InvalidGeometry)?;
        let id = self.issue_id();
        self.entities.insert(
            id,
            Entity {
                id,
                layer: layer.into(),
                kind,
            },
        );
        Ok(id)
    }

    /// Places a parametric module and generates its geometry on the
    /// default layer.
    pub fn add_module(
        &mut self,
        params: ModuleParams,
        origin: Point2,
        scale: f64,
    ) -> Result<ElementId, DrawingError> {
        let generated = regenerate(&params, origin, scale).map_err(DrawingError::InvalidParams)?;
        let module_id = self.issue_id();
        let owned = self.store_generated(module_id, generated);
        self.modules.insert(
            module_id,
            ModuleElement {
                module_id,
                params,
                origin,
                scale,
                owned_entity_ids: owned,
            },
        );
        Ok(module_id)
    }

    fn store_generated(&mut self, module_id: ElementId, generated: Vec<EntityKind>) -> Vec<ElementId> {
        let mut owned = Vec::with_capacity(generated.len());
        for kind in generated {
            let id = self.issue_id();
            self.entities.insert(
                id,
                Entity {
                    id,
                    layer: DEFAULT_LAYER.into(),
                    kind,
                },
            );
            self.owners.insert(id, module_id);
            owned.push(id);
        }
        owned
    }

    fn drop_owned(&mut self, module_id: ElementId) {
        let owned = core::mem::take(
            &mut self
                .modules
                .get_mut(&module_id)
                .expect("module exists")
                .owned_entity_ids,
        );
        for id in owned {
            self.entities.remove(&id);
            self.owners.remove(&id);
        }
    }

    /// Replaces a module's geometry with a fresh regeneration. The module id
    /// is kept; owned entities get new ids in generation order.
    pub fn regen_module_in_place(&mut self, module_id: ElementId) -> Result<(), DrawingError> {
        let m = self
            .modules
            .get(&module_id)
            .ok_or(DrawingError::NotFound(module_id))?;
        let generated =
            regenerate(&m.params, m.origin, m.scale).map_err(DrawingError::InvalidParams)?;
        self.drop_owned(module_id);
        let owned = self.store_generated(module_id, generated);
        self.modules.get_mut(&module_id).expect("module exists").owned_entity_ids = owned;
        Ok(())
    }

    /// Regenerates every module.
    pub fn regen_all(&mut self) -> Result<(), DrawingError> {
        let ids: Vec<ElementId> = self.modules.keys().copied().collect();
        for id in ids {
            self.regen_module_in_place(id)?;
        }
        Ok(())
    }

    /// Applies `edit` to a copy of the module's placement and parameters and
    /// regenerates. The drawing is left untouched when the result does not
    /// validate.
    fn edit_module<F>(&mut self, module_id: ElementId, edit: F) -> Result<(), DrawingError>
    where
        F: FnOnce(&mut ModuleParams, &mut Point2, &mut f64) -> Result<(), DrawingError>,
    {
        let m = self.modules.get(&module_id).ok_or_else(|| {
            if self.entities.contains_key(&module_id) {
                DrawingError::NotAModule(module_id)
            } else {
                DrawingError::NotFound(module_id)
            }
        })?;
        let mut params = m.params.clone();
        let mut origin = m.origin;
        let mut scale = m.scale;
        edit(&mut params, &mut origin, &mut scale)?;
        let generated = regenerate(&params, origin, scale).map_err(DrawingError::InvalidParams)?;
        self.drop_owned(module_id);
        let owned = self.store_generated(module_id, generated);
        let m = self.modules.get_mut(&module_id).expect("module exists");
        m.params = params;
        m.origin = origin;
        m.scale = scale;
        m.owned_entity_ids = owned;
        Ok(())
    }

    /// Replaces a module's parameter block and regenerates. The kind may not
    /// change.
    pub fn set_module_params(&mut self, module_id: ElementId, params: ModuleParams) -> Result<(), DrawingError> {
        self.edit_module(module_id, |p, _, _| {
            if p.kind() != params.kind() {
                return Err(DrawingError::InvalidParams(alloc::vec![Violation {
                    field: "kind".into(),
                    message: "module kind cannot change".into(),
                }]));
            }
            *p = params;
            Ok(())
        })
    }

    /// Translates a module (via its origin) or a plain entity.
    pub fn move_element(&mut self, id: ElementId, dx: f64, dy: f64) -> Result<(), DrawingError> {
        if !(dx.is_finite() && dy.is_finite()) {
            return Err(DrawingError::InvalidGeometry("non-finite coordinate"));
        }
        if self.modules.contains_key(&id) {
            return self.edit_module(id, |_, origin, _| {
                *origin = origin.translate(dx, dy);
                Ok(())
            });
        }
        if let Some(module) = self.owners.get(&id) {
            return Err(DrawingError::OwnedByModule {
                entity: id,
                module: *module,
            });
        }
        let entity = self.entities.get_mut(&id).ok_or(DrawingError::NotFound(id))?;
        let mut moved = entity.kind.clone();
        moved.translate(dx, dy);
        moved.validate().map_err(DrawingError::InvalidGeometry)?;
        entity.kind = moved;
        Ok(())
    }

    /// Multiplies a module's scale by `factor` (about its origin).
    pub fn stretch_module(&mut self, id: ElementId, factor: f64) -> Result<(), DrawingError> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(DrawingError::InvalidFactor);
        }
        self.edit_module(id, |_, _, scale| {
            let next = *scale * factor;
            if !(next.is_finite() && next > 0.0) {
                return Err(DrawingError::InvalidFactor);
            }
            *scale = next;
            Ok(())
        })
    }

    /// Removes a module with all its owned entities, or a plain entity.
    pub fn delete_element(&mut self, id: ElementId) -> Result<(), DrawingError> {
        if self.modules.contains_key(&id) {
            self.drop_owned(id);
            self.modules.remove(&id);
            return Ok(());
        }
        if let Some(module) = self.owners.get(&id) {
            return Err(DrawingError::OwnedByModule {
                entity: id,
                module: *module,
            });
        }
        self.entities.remove(&id).map(|_| ()).ok_or(DrawingError::NotFound(id))
    }

    /// Records the axes of grid module `grid_id` in route module `route_id`
    /// and regenerates the route. Returns the number of axes added.
    pub fn insert_grid_axes(&mut self, route_id: ElementId, grid_id: ElementId) -> Result<usize, DrawingError> {
        let grid = self.modules.get(&grid_id).ok_or(DrawingError::NotFound(grid_id))?;
        let (grid_params, grid_origin, grid_scale) = (grid.params.clone(), grid.origin, grid.scale);
        let route = self.modules.get(&route_id).ok_or(DrawingError::NotFound(route_id))?;
        if route.params.as_route().is_none() {
            return Err(DrawingError::NotARouteModule(route_id));
        }
        let mut added = 0;
        self.edit_module(route_id, |params, _, _| {
            let route = params.as_route_mut().expect("checked above");
            added = insert_grid_axes(route, &grid_params, grid_origin, grid_scale)?;
            Ok(())
        })?;
        Ok(added)
    }

    /// Snap points of an entity or of all entities owned by a module:
    /// segment endpoints and midpoints, circle centers, text anchors,
    /// deduplicated and sorted by `(x, y)`.
    pub fn snap_points(&self, id: ElementId) -> Result<Vec<Point2>, DrawingError> {
        let mut out = Vec::new();
        if let Some(m) = self.modules.get(&id) {
            for eid in &m.owned_entity_ids {
                self.entities[eid].kind.snap_candidates(&mut out);
            }
        } else {
            let e = self.entities.get(&id).ok_or(DrawingError::NotFound(id))?;
            e.kind.snap_candidates(&mut out);
        }
        sort_dedup_points(&mut out);
        Ok(out)
    }

    /// Bounding box of the whole drawing; `None` when it has no entities.
    pub fn bounds(&self) -> Option<Bounds> {
        self.entities
            .values()
            .map(|e| Some(e.kind.bounds()))
            .fold(None, Bounds::merge)
    }

    /// Bounding box of one entity or module.
    pub fn element_bounds(&self, id: ElementId) -> Result<Option<Bounds>, DrawingError> {
        if let Some(m) = self.modules.get(&id) {
            return Ok(m
                .owned_entity_ids
                .iter()
                .map(|eid| Some(self.entities[eid].kind.bounds()))
                .fold(None, Bounds::merge));
        }
        let e = self.entities.get(&id).ok_or(DrawingError::NotFound(id))?;
        Ok(Some(e.kind.bounds()))
    }

    /// Checks every document invariant, including that each module's stored
    /// geometry equals a fresh regeneration.
    pub fn check_invariants(&self) -> Result<(), String> {
        use alloc::format;
        if self.mark.is_empty() {
            return Err("empty drawing mark".into());
        }
        for (name, layer) in &self.layers {
            if name.is_empty() || *name != layer.name {
                return Err(format!("bad layer entry {name:?}"));
            }
        }
        for (id, e) in &self.entities {
            if *id != e.id || id.0 == 0 || id.0 >= self.next_id {
                return Err(format!("bad entity id {id}"));
            }
            if !self.layers.contains_key(&e.layer) {
                return Err(format!("entity {id} on unknown layer {:?}", e.layer));
            }
            e.kind.validate().map_err(|m| format!("entity {id}: {m}"))?;
        }
        let mut owned_total = 0;
        for (id, m) in &self.modules {
            if *id != m.module_id || id.0 == 0 || id.0 >= self.next_id {
                return Err(format!("bad module id {id}"));
            }
            if self.entities.contains_key(id) {
                return Err(format!("id {id} used by both an entity and a module"));
            }
            let generated = regenerate(&m.params, m.origin, m.scale)
                .map_err(|v| format!("module {id}: {}", join_violations(&v)))?;
            if generated.len() != m.owned_entity_ids.len() {
                return Err(format!("module {id}: owned geometry does not match regeneration"));
            }
            for (eid, kind) in m.owned_entity_ids.iter().zip(&generated) {
                let e = self
                    .entities
                    .get(eid)
                    .ok_or_else(|| format!("module {id}: owned entity {eid} missing"))?;
                if self.owners.get(eid) != Some(id) {
                    return Err(format!("entity {eid} ownership mismatch"));
                }
                if e.layer != DEFAULT_LAYER || e.kind != *kind {
                    return Err(format!("module {id}: owned geometry does not match regeneration"));
                }
            }
            owned_total += m.owned_entity_ids.len();
        }
        if owned_total != self.owners.len() {
            return Err("ownership index out of sync".into());
        }
        Ok(())
    }
}
