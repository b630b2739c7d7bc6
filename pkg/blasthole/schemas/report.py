from marshmallow import Schema, fields, post_dump
from marshmallow_enum import EnumField

from blasthole.utils.constants import Lidar, Stage


class HoleDetectionSchema(Schema):
    centre_3d = fields.List(fields.Float(), dump_only=True)
    radius = fields.Float(dump_only=True)
    confidence = fields.Float(dump_only=True)
    stage = EnumField(Stage, by_value=True, dump_only=True)
    pixel_centre = fields.List(fields.Float(), allow_none=True, dump_only=True)
    pixel_radius = fields.Float(allow_none=True, dump_only=True)


class FrameReportSchema(Schema):
    """Per-frame record; wall-clock timings are reported separately"""

    frame = fields.Integer(dump_only=True)
    stage = EnumField(Stage, by_value=True, allow_none=True, dump_only=True)
    distance = fields.Float(allow_none=True, dump_only=True)
    active_lidar = EnumField(Lidar, by_value=True, allow_none=True, dump_only=True)
    cone = fields.Dict(allow_none=True, dump_only=True)
    candidates = fields.List(fields.Dict(), dump_only=True)
    detection = fields.Nested(HoleDetectionSchema, allow_none=True, dump_only=True)
    miss = fields.String(allow_none=True, dump_only=True)


class HoleOutcomeSchema(Schema):
    index = fields.Integer(dump_only=True)
    status = fields.String(dump_only=True)
    offset = fields.Float(dump_only=True)
    steps = fields.Integer(dump_only=True)
    dip_attempts = fields.Integer(dump_only=True)


class MissionLogSchema(Schema):
    timeline = fields.List(fields.Dict(), dump_only=True)
    outcomes = fields.List(fields.Nested(HoleOutcomeSchema), dump_only=True)
    time = fields.Float(dump_only=True)

    @post_dump
    def add_summary(self, data, **kwargs):
        dipped = [outcome for outcome in data["outcomes"] if outcome["status"] == "dipped"]
        data["summary"] = {
            "holes": len(data["outcomes"]),
            "holes_dipped": len(dipped),
            "mean_offset": sum(o["offset"] for o in dipped) / len(dipped) if dipped else None,
            "simulated_time": data["time"],
        }
        return data


# Initialize schemas
frame_report_schema = FrameReportSchema()
mission_log_schema = MissionLogSchema()
