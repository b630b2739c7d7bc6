from marshmallow import EXCLUDE, Schema, fields, post_load
from marshmallow.validate import Range

from blasthole.models.geometry import RobotPose
from blasthole.models.mission import PlanHole
from blasthole.utils.constants import HOLE_DIAMETER_MAX, HOLE_DIAMETER_MIN


class PlanRowSchema(Schema):
    """One CSV row of a mission plan"""

    class Meta:
        unknown = EXCLUDE

    x = fields.Float(required=True)
    y = fields.Float(required=True)
    column = fields.Integer(required=True, validate=Range(min=0))
    diameter = fields.Float(load_default=0.27, validate=Range(min=HOLE_DIAMETER_MIN, max=HOLE_DIAMETER_MAX))

    @post_load
    def make_hole(self, data, **kwargs):
        return PlanHole(**data)


class PoseRowSchema(Schema):
    """One CSV row of a tracking poses file: the cloud file and the pose it was taken from"""

    class Meta:
        unknown = EXCLUDE

    file = fields.String(required=True)
    x = fields.Float(load_default=0.0)
    y = fields.Float(load_default=0.0)
    yaw = fields.Float(load_default=0.0)
    roll = fields.Float(load_default=0.0)
    pitch = fields.Float(load_default=0.0)

    @post_load
    def make_row(self, data, **kwargs):
        file = data.pop("file")
        return file, RobotPose(**data)


# Initialize schemas
plan_rows_schema = PlanRowSchema(many=True)
pose_rows_schema = PoseRowSchema(many=True)
