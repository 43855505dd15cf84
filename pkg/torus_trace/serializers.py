from rest_framework import serializers


class PairField(serializers.ListField):
    """Exactly two floats, e.g. a modulus (re, im) or a torus point"""

    def __init__(self, **kwargs):
        kwargs.setdefault('child', serializers.FloatField())
        kwargs.setdefault('min_length', 2)
        kwargs.setdefault('max_length', 2)
        super().__init__(**kwargs)


class ShapeChoiceMixin:
    """Exactly one way of naming the torus"""

    SHAPE_FIELDS = ('tau', 'rect', 'hex', 'square')

    def validate(self, data):
        given = [name for name in self.SHAPE_FIELDS if name in self.fields and data.get(name) not in (None, False)]
        allowed = [name for name in self.SHAPE_FIELDS if name in self.fields]
        if len(given) != 1:
            raise serializers.ValidationError(
                f"Give exactly one of {', '.join('--' + name for name in allowed)}"
            )
        data['shape_source'] = given[0]
        return data


class ModulusInputSerializer(ShapeChoiceMixin, serializers.Serializer):
    """Input of the flat command"""
    tau = PairField(required=False, allow_null=True, help_text="Modulus as RE IM")
    rect = serializers.FloatField(required=False, allow_null=True, help_text="Rectangle parameter a")
    hex = serializers.BooleanField(default=False, required=False)
    square = serializers.BooleanField(default=False, required=False)


class SweepInputSerializer(serializers.Serializer):
    a_min = serializers.FloatField(min_value=1e-12)
    a_max = serializers.FloatField(min_value=1e-12)
    steps = serializers.IntegerField(min_value=1, max_value=10_000)
    out = serializers.CharField(max_length=4096)
    workers = serializers.IntegerField(min_value=1, max_value=256, required=False, allow_null=True)
    n = serializers.IntegerField(min_value=8, required=False, allow_null=True)

    def validate(self, data):
        if data['a_max'] < data['a_min']:
            raise serializers.ValidationError(
                f"--a-max ({data['a_max']}) must not be below --a-min ({data['a_min']})"
            )
        if data['steps'] == 1 and data['a_max'] != data['a_min']:
            raise serializers.ValidationError("A single step needs --a-min equal to --a-max")
        return data


class BubbleInputSerializer(serializers.Serializer):
    a = serializers.FloatField(min_value=1e-12)
    smooth = serializers.FloatField(required=False, allow_null=True, help_text="Smoothing width")
    n = serializers.IntegerField(min_value=8, required=False, allow_null=True)


class GreenInputSerializer(serializers.Serializer):
    tau = PairField()
    x = PairField()
    y = PairField()
    spectral = serializers.BooleanField(default=False)


class MassInputSerializer(serializers.Serializer):
    tau = PairField()
    points = serializers.IntegerField(min_value=1, max_value=100_000, default=16)


class TwistInputSerializer(serializers.Serializer):
    y = serializers.FloatField()
    x_list = serializers.ListField(child=serializers.FloatField(), min_length=1)


class VariationInputSerializer(serializers.Serializer):
    a = serializers.FloatField(min_value=1e-12)
    mode = serializers.IntegerField(min_value=1)
    lam = serializers.FloatField(default=1e-3)
    n = serializers.IntegerField(min_value=8, required=False, allow_null=True)

    def validate_lam(self, value):
        if value == 0:
            raise serializers.ValidationError("lam must be nonzero")
        return value


class McInputSerializer(ShapeChoiceMixin, serializers.Serializer):
    SHAPE_FIELDS = ('tau', 'rect')

    tau = PairField(required=False, allow_null=True)
    rect = serializers.FloatField(required=False, allow_null=True)
    eps = serializers.FloatField()
    trials = serializers.IntegerField()
    seed = serializers.IntegerField(min_value=0, default=0)
    dt = serializers.FloatField(required=False, allow_null=True)
    calibrate = serializers.BooleanField(default=False)


class ComplexModulusSerializer(serializers.Serializer):
    re = serializers.FloatField()
    im = serializers.FloatField()


class SpectralReportSerializer(serializers.Serializer):
    lambda1 = serializers.FloatField()
    shape_class = serializers.CharField(source='shape_class.value')
    ztilde1 = serializers.FloatField()
    logdet = serializers.FloatField()
    modulus = ComplexModulusSerializer()
    reduced_modulus = ComplexModulusSerializer()


class GreensEvalSerializer(serializers.Serializer):
    g = serializers.FloatField()
    log_part = serializers.FloatField()
    h = serializers.FloatField()
    dist = serializers.FloatField()


class SweepRowSerializer(serializers.Serializer):
    """Column order is the CSV contract"""
    a = serializers.FloatField()
    ztilde_flat = serializers.FloatField()
    F_phi = serializers.FloatField()
    ztilde_bubble = serializers.FloatField()
    sphere_constant = serializers.FloatField()
    gap = serializers.FloatField()


class TwistRowSerializer(serializers.Serializer):
    x = serializers.FloatField()
    ztilde = serializers.FloatField()
    gap = serializers.FloatField()
    decreased = serializers.BooleanField()


class TwistTableSerializer(serializers.Serializer):
    y = serializers.FloatField()
    monotone = serializers.BooleanField()
    rows = TwistRowSerializer(many=True)


class HitTimeEstimateSerializer(serializers.Serializer):
    mean = serializers.FloatField()
    std_err = serializers.FloatField()
    n = serializers.IntegerField()


class TraceEstimateSerializer(serializers.Serializer):
    value = serializers.FloatField()
    std_err = serializers.FloatField()
    offset = serializers.FloatField()
    n = serializers.IntegerField()


class RunManifestSerializer(serializers.Serializer):
    command = serializers.CharField()
    parameters = serializers.DictField()
    tolerances = serializers.DictField()
    library_version = serializers.CharField()
    timestamp = serializers.CharField()
