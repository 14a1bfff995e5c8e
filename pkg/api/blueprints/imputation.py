"""
模型与填补端点
输入向量位于模型空间（拟合时缩放后的数值），observed 中 1 表示观测到
"""
import logging
from flask import Blueprint, current_app, jsonify, request

from api.exceptions import ValidationException
from api.services import ImputationService, ModelService

logger = logging.getLogger(__name__)

imputation_bp = Blueprint('imputation', __name__)


def _service() -> ImputationService:
    """每个应用一个填补服务（模型按路径缓存在仓库中）"""
    service = current_app.extensions.get('fami_imputation')
    if service is None:
        service = ImputationService(
            model_path=current_app.config['MODEL_PATH'],
            encoder_path=current_app.config.get('ENCODER_PATH') or None,
        )
        current_app.extensions['fami_imputation'] = service
    return service


def _body():
    payload = request.get_json(silent=True)
    if not isinstance(payload, dict):
        raise ValidationException("请求体必须是 JSON 对象")
    if 'x' not in payload or 'observed' not in payload:
        raise ValidationException("请求体需要 x 与 observed 字段")
    return payload['x'], payload['observed'], payload.get('method', 'exact')


@imputation_bp.route('/model', methods=['GET'])
def get_model():
    """
    获取已加载模型的概要
    ---
    tags:
      - Model
    responses:
      200:
        description: 模型维数与拟合诊断
        schema:
          properties:
            status:
              type: string
              example: "success"
            data:
              type: object
      404:
        description: 模型文件不存在
    """
    service = _service()
    model, diagnostics, _, image_shape = service.repository.load_model(service.model_path)
    return jsonify({
        "status": "success",
        "data": ModelService.describe(model, diagnostics, image_shape),
    }), 200


@imputation_bp.route('/impute', methods=['POST'])
def post_impute():
    """
    填补单个样本的缺失值
    ---
    tags:
      - Imputation
    parameters:
      - name: body
        in: body
        required: true
        schema:
          properties:
            x:
              type: array
              items:
                type: number
              description: 长度 D 的输入，缺失位置可为 null
            observed:
              type: array
              items:
                type: integer
              description: 长度 D 的 0/1 列表，1 表示观测到
            method:
              type: string
              default: exact
              description: mean / fca / sca / de / de_star / exact
    responses:
      200:
        description: 填补结果、预测标准差与隐变量后验
      400:
        description: 参数错误或维数不符
    """
    x, observed, method = _body()
    logger.info(f"填补请求: method={method}")
    return jsonify({"status": "success", "data": _service().impute(x, observed, method)}), 200


@imputation_bp.route('/posterior', methods=['POST'])
def post_posterior():
    """
    计算单个样本的隐变量后验
    ---
    tags:
      - Imputation
    parameters:
      - name: body
        in: body
        required: true
        schema:
          properties:
            x:
              type: array
              items:
                type: number
            observed:
              type: array
              items:
                type: integer
            method:
              type: string
              default: exact
              description: fca / sca / de / de_star / exact
    responses:
      200:
        description: 后验均值与协方差
      400:
        description: 参数错误或维数不符
    """
    x, observed, method = _body()
    return jsonify({"status": "success", "data": _service().posterior(x, observed, method)}), 200
