from marshmallow import RAISE, Schema, ValidationError, fields, post_load, validates_schema
from marshmallow.validate import OneOf, Range

from blasthole.models.geometry import RobotPose
from blasthole.models.scene import BeamPattern, Pit, SceneSpec
from blasthole.utils import constants as c

POSITIVE = Range(min=0.0, min_inclusive=False)


class PitSchema(Schema):
    class Meta:
        unknown = RAISE

    bearing = fields.Float(required=True)
    depth = fields.Float(required=True, validate=POSITIVE)
    radius = fields.Float(required=True, validate=POSITIVE)

    @post_load
    def make_pit(self, data, **kwargs):
        return Pit(**data)


class SceneSpecSchema(Schema):
    """Parametric bench scene"""

    class Meta:
        unknown = RAISE

    cone_base_radius = fields.Float(load_default=0.9, validate=POSITIVE)
    cone_height = fields.Float(load_default=0.35, validate=POSITIVE)
    hole_diameter = fields.Float(
        load_default=0.27, validate=Range(min=c.HOLE_DIAMETER_MIN, max=c.HOLE_DIAMETER_MAX)
    )
    collar_diameter = fields.Float(load_default=None, allow_none=True, validate=POSITIVE)
    neck_depth = fields.Float(load_default=c.NECK_DEPTH, validate=POSITIVE)
    shaft_depth = fields.Float(load_default=c.SHAFT_DEPTH, validate=POSITIVE)
    pits = fields.List(fields.Nested(PitSchema), load_default=list)
    pits_enabled = fields.Boolean(load_default=True)
    centre = fields.List(fields.Float(), load_default=lambda: [0.0, 0.0])
    surface_jitter = fields.Float(load_default=c.SURFACE_JITTER, validate=Range(min=0.0))
    seed = fields.Integer(load_default=0, validate=Range(min=0))

    @validates_schema
    def validate_proportions(self, data, **kwargs):
        collar = data.get("collar_diameter")
        if collar is not None and collar < data["hole_diameter"]:
            raise ValidationError({"collar_diameter": ["Collar must be at least as wide as the hole."]})
        if (collar or data["hole_diameter"]) > 2 * data["cone_base_radius"]:
            raise ValidationError({"cone_base_radius": ["Cone base must be wider than the collar."]})
        if len(data["centre"]) != 2:
            raise ValidationError({"centre": ["Centre must be [x, y]."]})

    @post_load
    def make_spec(self, data, **kwargs):
        data["pits"] = tuple(data["pits"])
        data["centre"] = tuple(data["centre"])
        return SceneSpec(**data)


class PoseSchema(Schema):
    class Meta:
        unknown = RAISE

    x = fields.Float(load_default=0.0)
    y = fields.Float(load_default=0.0)
    yaw = fields.Float(load_default=0.0)
    roll = fields.Float(load_default=0.0)
    pitch = fields.Float(load_default=0.0)

    @post_load
    def make_pose(self, data, **kwargs):
        return RobotPose(**data)


class SceneDocumentSchema(Schema):
    """Input of `simulate scene`: a scene, where the robot stands and which sensor it uses"""

    class Meta:
        unknown = RAISE

    scene = fields.Nested(SceneSpecSchema, load_default=SceneSpec)
    pose = fields.Nested(PoseSchema, load_default=RobotPose)
    pattern = fields.String(load_default="dense", validate=OneOf(["sparse", "dense"]))
    range_noise = fields.Float(load_default=c.RANGE_NOISE, validate=Range(min=0.0))

    @post_load
    def make_document(self, data, **kwargs):
        preset = BeamPattern.dense if data["pattern"] == "dense" else BeamPattern.sparse
        data["pattern"] = preset(range_noise=data.pop("range_noise"))
        return data


# Initialize schemas
scene_spec_schema = SceneSpecSchema()
scene_document_schema = SceneDocumentSchema()
